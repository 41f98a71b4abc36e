"""
qag: QAOA-based orchestration of GNN network-modeling applications onto
(configuration, compute node) pairs, with the Opt and RNF benchmarks and a
sweep harness
"""

__version__ = "1.0.0"
