"""Balance-aware retiming of upper-body humanoid motions.

Modules
-------
motiondata  clips, windows, trajectories, robot model and file I/O
kinodyn     forward kinematics, centre of mass, centroidal momentum
stability   support polygon, ZMP/ZML and the centre-distance margin
retimer     receding-horizon duration search, chunk blending, resampling
simharness  reduced standing-humanoid simulator with disturbances
analysis    metrics, Pareto fronts, regressions and suite protocols
cli         command-line entry point
"""

__version__ = "0.1.0"
