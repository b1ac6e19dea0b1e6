"""relightkit: flash+depth image relighting pipeline."""

from ._core import (
    brdf_eval,
    cast_shadow_mask,
    default_config,
    degrade_depth,
    direction_grid,
    env_weights,
    evaluate,
    fresnel_sg,
    generate_dataset,
    ggx_d,
    light_frame,
    mse,
    normals_from_depth,
    oracle_relit,
    psnr,
    read_rlk,
    relight,
    set_deterministic,
    shadow_encode,
    smith_g,
    srgb_decode_value,
    srgb_encode_value,
    subtract_clamped,
    superpose,
    train,
    unproject,
    write_preview,
    write_rlk,
)

__all__ = [
    "brdf_eval",
    "cast_shadow_mask",
    "default_config",
    "degrade_depth",
    "direction_grid",
    "env_weights",
    "evaluate",
    "fresnel_sg",
    "generate_dataset",
    "ggx_d",
    "light_frame",
    "mse",
    "normals_from_depth",
    "oracle_relit",
    "psnr",
    "read_rlk",
    "relight",
    "set_deterministic",
    "shadow_encode",
    "smith_g",
    "srgb_decode_value",
    "srgb_encode_value",
    "subtract_clamped",
    "superpose",
    "train",
    "unproject",
    "write_preview",
    "write_rlk",
]

__version__ = "0.1.0"
