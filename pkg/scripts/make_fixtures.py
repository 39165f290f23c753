"""Write the bundled example networks as JSON documents for the CLI.

Usage: python scripts/make_fixtures.py [OUT_DIR]   (default: ./networks)
"""

import json
import sys
from pathlib import Path

from phasebalance import fixtures


def main() -> int:
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "networks")
    out.mkdir(parents=True, exist_ok=True)
    docs = {
        "two_node.json": fixtures.two_node_doc(kind="adjustable", T=4),
        "balanced.json": fixtures.balanced_doc(T=4),
        "medium_feeder.json": fixtures.medium_feeder_doc(),
        "ieee13_like.json": fixtures.ieee13_like_doc(),
        "infeasible_svc.json": fixtures.infeasible_svc_doc(),
    }
    for i in range(5):
        docs[f"small_{i}.json"] = fixtures.small_feeder_doc(i)
    for name, doc in sorted(docs.items()):
        path = out / name
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
