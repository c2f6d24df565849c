"""Photorealistic style transfer engine with a searchable decoder."""

from photonas._core import (
    NUM_SLOTS,
    PHOTONAS_CODE,
    DimensionError,
    DivergedError,
    FormatError,
    Graph,
    InputError,
    ParseError,
    PhotonasError,
    PreconditionError,
    UnsupportedError,
    cli,
    gram_loss,
    load_weights,
    op_fraction,
    preset_names,
    procedural_corpus,
    psnr,
    read_ppm,
    resolve_arch,
    save_weights,
    slot_name,
    ssim,
    ssim_edge,
    train_decoder,
    wct,
    write_ppm,
)

__all__ = [
    "NUM_SLOTS",
    "PHOTONAS_CODE",
    "DimensionError",
    "DivergedError",
    "FormatError",
    "Graph",
    "InputError",
    "ParseError",
    "PhotonasError",
    "PreconditionError",
    "UnsupportedError",
    "cli",
    "gram_loss",
    "load_weights",
    "op_fraction",
    "preset_names",
    "procedural_corpus",
    "psnr",
    "read_ppm",
    "resolve_arch",
    "save_weights",
    "slot_name",
    "ssim",
    "ssim_edge",
    "train_decoder",
    "wct",
    "write_ppm",
]
