"""Expose a dataclass as command-line options (one long option per field)."""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import TypeVar

T = TypeVar("T")


def parse_config(cls: type[T], description: str | None = None, argv=None) -> T:
    main_doc = getattr(sys.modules.get("__main__"), "__doc__", None)
    parser = argparse.ArgumentParser(description=description or main_doc, allow_abbrev=False)
    for f in dataclasses.fields(cls):
        flag = "--" + f.name.replace("_", "-")
        if f.type in (bool, "bool"):
            parser.add_argument(flag, action="store_true", default=f.default)
        else:
            kind = {"int": int, int: int}.get(f.type, str)
            parser.add_argument(flag, type=kind, default=f.default, help=f"default: {f.default}")
    return cls(**vars(parser.parse_args(argv)))


def write_text(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
        print(f"wrote {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
