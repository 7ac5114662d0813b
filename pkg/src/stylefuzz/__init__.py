"""Grammar-driven fuzzing of compiler optimizations through composition styles.

Typical use::

    from stylefuzz import load_language, Program, scan, mutate

    lang = load_language("mini-c")
    donor = Program.build(lang, donor_text, "donor")
    recipient = Program.build(lang, recipient_text, "recipient")
    match = scan("Cousins", donor.root, donor.chains)[0]
    print(mutate(match, donor, recipient, "Replicate", seed=1).text)
"""

from .constructs import load_annotations, resolve_decl_use, translate
from .grammar import load_grammar, parse, shape, tokenize, unparse
from .mutators import Rejected, mutate
from .program import Program, load_language
from .styles import STYLES, extract_pool, scan

__version__ = "0.1.0"

__all__ = [
    "Program", "Rejected", "STYLES", "extract_pool", "load_annotations", "load_grammar", "load_language",
    "mutate", "parse", "resolve_decl_use", "scan", "shape", "tokenize", "translate", "unparse",
]
