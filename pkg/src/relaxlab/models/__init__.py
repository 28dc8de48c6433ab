"""Built-in relaxation models: elasticity, combustion and symmetric systems."""
from .combustion import CombustionParams, build_combustion, combustion_j
from .elasticity import ElasticityParams, build_elasticity, elasticity_h_inverse
from .symmetric import SymmetricParams, build_symmetric, symmetric_J, symmetric_j

BUILDERS = {
    "elasticity": build_elasticity,
    "combustion": build_combustion,
    "symmetric": build_symmetric,
}


def build_model(name, **overrides):
    """Build a built-in model by name with scalar parameter overrides."""
    from ..errors import ContractError
    try:
        builder = BUILDERS[name]
    except KeyError:
        raise ContractError(f"unknown model {name!r}; expected one of {sorted(BUILDERS)}")
    return builder(**overrides)


__all__ = [
    "BUILDERS", "build_model",
    "ElasticityParams", "build_elasticity", "elasticity_h_inverse",
    "CombustionParams", "build_combustion", "combustion_j",
    "SymmetricParams", "build_symmetric", "symmetric_j", "symmetric_J",
]
