"""Sideband inequivalence and optomechanical sideband-asymmetry thermometry.

Modules
-------
params        device/drive parameters and regime labels
steady_state  intracavity photon number (cubic), asymptotes, bistability
sideband      frequency/amplitude inequivalence ``delta_bar``
spectra       heterodyne spectra and sideband populations
thermometry   temperature estimators, crossover power, bias curves
experiment    synthetic traces, Lorentzian fits, end-to-end pipeline
cli           command-line front end
"""

__version__ = "0.1.0"
