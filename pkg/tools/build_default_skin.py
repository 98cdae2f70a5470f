"""Regenerate the bundled default skin histogram.

The histogram enumerates every 24-bit RGB color once and labels it with an
explicit RGB skin rule, giving a deterministic stand-in for a trained
skin/non-skin pixel corpus.

    python tools/build_default_skin.py
"""

from pathlib import Path

from skinshape.skin import build_rule_histogram

OUT = Path(__file__).resolve().parents[1] / "src" / "skinshape" / "data" / "default_skin.bin"

if __name__ == "__main__":
    model = build_rule_histogram(32)
    OUT.write_bytes(model.to_bytes())
    print(f"wrote {OUT} (skin={model.skin_total}, nonskin={model.nonskin_total})")
