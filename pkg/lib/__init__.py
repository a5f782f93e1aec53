"""Realizability toolkit for games with repeating-values winning conditions."""
