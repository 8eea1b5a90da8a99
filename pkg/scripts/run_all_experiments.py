#!/usr/bin/env python3
"""Run every bundled experiment config and print a one-line summary each."""

import pathlib
import sys

from cocyclib.cli import emit, load_config, run

CONFIGS = {
    "example-unipotent": "example_unipotent.json",
    "exponents": "exponents_mixed.json",
    "holonomy": "holonomy_two_block.json",
    "blocks": "blocks_orthogonal.json",
    "shadow": "shadow_mixed.json",
    "reconstruct": "reconstruct_two_block.json",
    "verify-zimmer": "verify_zimmer_two_block.json",
}


def main() -> int:
    here = pathlib.Path(__file__).resolve().parent
    out_dir = here / "reports"
    out_dir.mkdir(exist_ok=True)
    all_ok = True
    for kind, fname in sorted(CONFIGS.items()):
        report = run(load_config(str(here / "configs" / fname)))
        (out_dir / f"{kind}.json").write_text(emit(report, "json"))
        status = "ok" if report["passed"] else "FAILED"
        checks = ", ".join(f"{c['name']}={'y' if c['passed'] else 'N'}"
                           for c in report["checks"])
        print(f"{kind:18s} {status:6s} {checks}")
        all_ok = all_ok and report["passed"]
    print(f"reports written to {out_dir}")
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
