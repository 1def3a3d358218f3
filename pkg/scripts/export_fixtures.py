#!/usr/bin/env python3
"""Write the canonical fixture models to models/*.json."""

import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from schedflow import fixtures  # noqa: E402
from schedflow.model import model_from_dict, serialize_model  # noqa: E402


def main() -> None:
    out_dir = pathlib.Path(__file__).resolve().parents[1] / "models"
    out_dir.mkdir(exist_ok=True)
    for name, make in fixtures.FIXTURES.items():
        model = model_from_dict(make())
        path = out_dir / f"{name}.json"
        path.write_text(serialize_model(model))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
