"""Fragment-based bilingual ultrasound-report toolkit.

Segments standardized Chinese ultrasound reports into delimiter-bounded
fragments, maintains an expert-reviewed zh->en translation lookup table,
emits four-way supervised fine-tuning prompt datasets, and evaluates
generated reports with BLEU, ROUGE-L, CIDEr, keyword F1, and embedding F1.
"""

from __future__ import annotations

__version__ = "0.1.0"

__all__ = ["__version__"]
