"""Special flows over two-dimensional torus rotations.

Construction and certification of rotation pairs, piecewise-C2 roof
functions with their Birkhoff cocycles, the suspension flow itself, and a
battery of quantitative mixing / rigidity / shadowing diagnostics.

Subpackage map:

- ``cfrac``       exact continued fractions, certified reals, floor sums
- ``rotations``   palindromic and fast-alternating rotation pairs, ergodicity scans
- ``roof``        the roof-function class and Birkhoff sum engines
- ``specflow``    the suspension flow, its metric, uniform sampling
- ``diagnostics`` exponential sums, correlation decay, level sets, rigidity scans
- ``fayad``       alternating-stretch partitions and the mixing-criterion checker
- ``ratner``      sparse crossing sequences and shadowing-witness machinery
- ``kernels``     compiled batch kernels with a pure-Python fallback
- ``cli``         batch front end (``specflow-lab`` entry point)
"""

__version__ = "0.1.0"
