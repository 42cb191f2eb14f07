"""Split-state non-malleable codes from a two-source non-malleable extractor."""
