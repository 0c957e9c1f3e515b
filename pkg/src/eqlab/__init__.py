"""Performance-vs-complexity workbench for NN equalizers on coherent links."""

__version__ = "0.1.0"
