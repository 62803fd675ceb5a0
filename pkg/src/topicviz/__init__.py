"""Joint topic modeling and 2-D document visualization.

A variational autoencoder whose decoder is a normalized radial basis
function network (topic coordinates as centers) feeding a linear
softmax word model, trained by minibatch gradient ascent on the ELBO.
Includes a MAP-EM baseline, k-NN / NPMI evaluators, and an SVG renderer.
"""

__version__ = "0.1.0"
