"""Shared loaders for the test suite."""

from functools import lru_cache
from pathlib import Path

from stylefuzz.program import Program, data_dir, load_language

TESTS = Path(__file__).resolve().parent
SAMPLES = TESTS / "fixtures" / "samples"
CORPUS = data_dir() / "corpus"
CONFIGS = data_dir() / "configs"


def lang_for(path) -> str:
    return "mini-ir" if str(path).endswith(".mlir") else "mini-c"


def build(path) -> Program:
    path = Path(path)
    return Program.build(load_language(lang_for(path)), path.read_text(encoding="utf-8"), path.name)


def build_text(text: str, lang: str = "mini-c", pid: str = "t") -> Program:
    return Program.build(load_language(lang), text, pid)


def sample(name: str) -> Program:
    return build(SAMPLES / name)


def fixture_paths(lang: str | None = None) -> list:
    """Every shipped program: corpora plus the sample programs."""
    out = []
    for lname, ext in (("mini-c", ".c"), ("mini-ir", ".mlir")):
        if lang not in (None, lname):
            continue
        for sub in ("donors", "seeds"):
            out += sorted((CORPUS / lname / sub).glob(f"*{ext}"))
        out += sorted(SAMPLES.glob(f"*{ext}"))
    return out


@lru_cache(maxsize=None)
def programs(lang: str | None = None) -> tuple:
    return tuple(build(p) for p in fixture_paths(lang))


@lru_cache(maxsize=None)
def corpus(lang: str, sub: str) -> tuple:
    ext = ".mlir" if lang == "mini-ir" else ".c"
    return tuple(build(p) for p in sorted((CORPUS / lang / sub).glob(f"*{ext}")))
