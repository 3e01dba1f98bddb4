"""
Command-line interface for lsp_distill.
"""
