"""Exact-rational ReLU networks, MLP Code, switched networks and their building blocks."""

from rgnn_compiler.mlp.code import Lin, MlpCode, V, compile_mlp_code, interpret_mlp_code
from rgnn_compiler.mlp.machine import CompiledMachine, compile_stack_machine, switched_machine
from rgnn_compiler.mlp.network import (
    Layer,
    Mlp,
    RecurrentMlp,
    compose,
    eval_mlp,
    parallel,
    run_recurrent,
)
from rgnn_compiler.mlp.switched import (
    SwitchedCode,
    SwitchedNetwork,
    check_switched_contract,
    wrap_as_switched,
)

__all__ = [
    "CompiledMachine",
    "Layer",
    "Lin",
    "Mlp",
    "MlpCode",
    "RecurrentMlp",
    "SwitchedCode",
    "SwitchedNetwork",
    "V",
    "check_switched_contract",
    "compile_mlp_code",
    "compile_stack_machine",
    "compose",
    "eval_mlp",
    "interpret_mlp_code",
    "parallel",
    "run_recurrent",
    "switched_machine",
    "wrap_as_switched",
]
