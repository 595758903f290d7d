"""Object-goal navigation with agent-centric relation graphs in a gridworld.

The package bundles a deterministic discrete simulator, a small reverse-mode
autodiff engine, the two-graph visual representation (horizontal object
relations plus agent-target depth), an LSTM actor-critic, imitation and
asynchronous advantage actor-critic training, and Success/SPL evaluation.
"""

__version__ = "0.1.0"
