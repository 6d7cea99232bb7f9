"""Equilibrium memory toolkit.

Curie-Weiss metastability (``curie_weiss``), the thermal toric code
(``toric_code``), passivity and ergotropy of finite quantum systems
(``passivity``), and the experiment harness behind the ``eqmem`` CLI.
"""

__version__ = "0.1.0"
