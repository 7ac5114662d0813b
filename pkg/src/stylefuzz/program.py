"""Languages (grammar plus annotations) and fully analysed programs."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .constructs import (AnnotationSet, ConstructNode, DeclUseChains, load_annotations,
                         resolve_decl_use, translate)
from .grammar import Grammar, ParseNode, load_grammar

log = logging.getLogger(__name__)

BUILTIN_LANGUAGES = ("mini-c", "mini-ir")
EXTENSIONS = {"mini-c": ".c", "mini-ir": ".mlir"}


def data_dir() -> Path:
    return Path(str(resources.files("stylefuzz") / "data"))


@dataclass(frozen=True, eq=False)
class Language:
    name: str
    grammar: Grammar
    ann: AnnotationSet

    @property
    def extension(self) -> str:
        return EXTENSIONS.get(self.name, ".txt")

    def analyse(self, source: str, pid: str = "") -> "Program":
        return Program.build(self, source, pid)


_LANG_CACHE: dict = {}


def load_language(name: str | None = None, grammar_path=None, annotation_path=None) -> Language:
    """A built-in language by name, or one assembled from explicit files."""
    if grammar_path is None:
        if name not in BUILTIN_LANGUAGES:
            raise ValueError(f"unknown language {name!r}; built-ins are {', '.join(BUILTIN_LANGUAGES)}")
        base = data_dir() / "grammars"
        grammar_path = base / f"{name}.grammar"
        annotation_path = annotation_path or base / f"{name}.ann"
    key = (str(grammar_path), str(annotation_path))
    if key in _LANG_CACHE:
        return _LANG_CACHE[key]
    grammar = load_grammar(Path(grammar_path).read_text(encoding="utf-8"))
    ann_text = Path(annotation_path).read_text(encoding="utf-8") if annotation_path else ""
    ann = load_annotations(ann_text, grammar)
    lang = Language(name or ann.language or Path(grammar_path).stem, grammar, ann)
    _LANG_CACHE[key] = lang
    return lang


@dataclass(frozen=True, eq=False)
class Program:
    pid: str
    source: str
    tree: ParseNode
    root: ConstructNode
    chains: DeclUseChains
    lang: Language

    @classmethod
    def build(cls, lang: Language, source: str, pid: str = "") -> "Program":
        tree = lang.grammar.parse(source)
        root = translate(tree, lang.ann)
        chains = resolve_decl_use(root, lang.ann)
        return cls(pid, source, tree, root, chains, lang)

    @property
    def tokens(self):
        return self.tree.tokens


def load_dir(lang: Language, directory) -> tuple[list, list]:
    """Analyse every file in ``directory`` (sorted by name); returns (programs, skipped paths)."""
    from .grammar import ParseError, TokenizeError

    programs, skipped = [], []
    for path in sorted(Path(directory).iterdir()):
        if not path.is_file() or path.name.startswith("."):
            continue
        try:
            programs.append(Program.build(lang, path.read_text(encoding="utf-8"), path.name))
        except (ParseError, TokenizeError, UnicodeDecodeError) as exc:
            log.warning("skipping %s: %s", path, exc)
            skipped.append(str(path))
    return programs, skipped
