"""
lsp_distill - Local structure preserving distillation for graph networks

Teacher/student training for graph attention and dynamic-graph (EdgeConv)
models, built on a small reverse-mode autodiff engine. The student is guided
by matching the distribution of similarities between every node and its
neighbours in the teacher's feature space, with KD, FitNet and attention
transfer available as baselines.
"""

__version__ = "0.1.0"
__author__ = "LSP Distill Team"
__description__ = "Local structure preserving knowledge distillation for GCNs"
