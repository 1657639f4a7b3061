"""corpusforge: SMT data pipeline toolkit.

Mines parallel sentence pairs from comparable document pairs, selects
domain-relevant training data, and provides the supporting machinery:
corpus cleaning and statistics, IBM Model 1 lexicons with symmetrized
alignments, interpolated Kneser-Ney language models in ARPA format, and
BLEU/NIST/TER evaluation.
"""

__version__ = "0.1.0"
