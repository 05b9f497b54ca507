# chunglil - small-deviation asymptotics in Chung's law of the iterated logarithm

__version__ = "1.0.0"
