"""Extreme Gram dimension toolkit."""
