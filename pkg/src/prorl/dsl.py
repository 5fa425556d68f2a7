"""Policy programs: representation, interpreter, generation, and mutation.

A program is a binary tree. Leaves are dispatching-rule actions; internal
nodes are if/else statements guarded by a linear condition over the five
state concepts,

    w0 + w1*LD + w2*AM + w3*AO + w4*JD + w5*ST > 0,

routing evaluation to the then-branch on a strictly positive value and to
the else-branch otherwise. Programs are immutable values; generation and
mutation take an explicit random source and respect the structural limits
(depth at most 4, at most 85 tokens) by construction.

Token accounting: an action leaf costs 1 token; an if-node costs 1 for the
keyword plus 7 for its condition (six weights and the comparison) plus the
tokens of its two branches.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Union

from .concepts import CONCEPT_NAMES, ConceptVector
from .instance import Instance
from .pdr import HEURISTICS, Heuristic, apply
from .sim import Policy

MAX_DEPTH = 4
MAX_TOKENS = 85
WEIGHT_LOW = -2.0
WEIGHT_HIGH = 2.0
WEIGHTS_LEN = 1 + len(CONCEPT_NAMES)

# minimal token cost of an if-node with two action leaves
_IF_MIN_TOKENS = 1 + 7 + 1 + 1


class PolicyFormatError(ValueError):
    """Raised when a serialized program document is malformed."""


@dataclass(frozen=True)
class Condition:
    """Linear guard; weights are (bias, LD, AM, AO, JD, ST) within the box."""

    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) != WEIGHTS_LEN:
            raise ValueError(f"condition needs {WEIGHTS_LEN} weights, got {len(self.weights)}")
        for w in self.weights:
            if not math.isfinite(w):
                raise ValueError("condition weight is not finite")
            if not WEIGHT_LOW <= w <= WEIGHT_HIGH:
                raise ValueError(f"weight {w} outside [{WEIGHT_LOW}, {WEIGHT_HIGH}]")

    def value(self, cv: ConceptVector) -> float:
        w = self.weights
        ld, am, ao, jd, st = cv.as_tuple()
        return w[0] + w[1] * ld + w[2] * am + w[3] * ao + w[4] * jd + w[5] * st


@dataclass(frozen=True)
class Action:
    heuristic: Heuristic


@dataclass(frozen=True)
class If:
    condition: Condition
    then_branch: "Node"
    else_branch: "Node"


Node = Union[Action, If]


def depth(node: Node) -> int:
    if isinstance(node, Action):
        return 1
    return 1 + max(depth(node.then_branch), depth(node.else_branch))


def node_tokens(node: Node) -> int:
    if isinstance(node, Action):
        return 1
    return 1 + 7 + node_tokens(node.then_branch) + node_tokens(node.else_branch)


@dataclass(frozen=True)
class Program:
    root: Node

    def __post_init__(self):
        d = depth(self.root)
        if d > MAX_DEPTH:
            raise ValueError(f"program depth {d} exceeds {MAX_DEPTH}")
        t = node_tokens(self.root)
        if t > MAX_TOKENS:
            raise ValueError(f"program has {t} tokens, limit {MAX_TOKENS}")

    @property
    def depth(self) -> int:
        return depth(self.root)


def token_count(program: Program) -> int:
    return node_tokens(program.root)


def if_count(program: Program) -> int:
    def count(node: Node) -> int:
        if isinstance(node, Action):
            return 0
        return 1 + count(node.then_branch) + count(node.else_branch)

    return count(program.root)


def evaluate_counted(program: Program, cv: ConceptVector) -> tuple[Heuristic, int]:
    """Route the concept vector to a leaf; also count condition evaluations."""
    node = program.root
    conditions = 0
    while isinstance(node, If):
        conditions += 1
        node = node.then_branch if node.condition.value(cv) > 0.0 else node.else_branch
    return node.heuristic, conditions


def evaluate(program: Program, cv: ConceptVector) -> Heuristic:
    return evaluate_counted(program, cv)[0]


def make_policy(program: Program) -> Policy:
    """Wrap a program as a simulator policy: route to a rule, then apply it."""

    def policy(cv, ready, state, instance):
        rule = evaluate(program, cv)
        return apply(rule, ready, state, instance), rule.value

    return policy


def _random_condition(rng: random.Random) -> Condition:
    return Condition(tuple(rng.uniform(WEIGHT_LOW, WEIGHT_HIGH) for _ in range(WEIGHTS_LEN)))


def _random_node(rng: random.Random, depth_budget: int, token_budget: int) -> Node:
    """Grammar-driven expansion; if/action each with probability 0.5 when both fit."""
    can_branch = depth_budget >= 2 and token_budget >= _IF_MIN_TOKENS
    if can_branch and rng.random() < 0.5:
        condition = _random_condition(rng)
        then_budget = token_budget - 9 - 1  # reserve one token for the else leaf
        then_branch = _random_node(rng, depth_budget - 1, then_budget)
        else_budget = token_budget - 9 - node_tokens(then_branch)
        else_branch = _random_node(rng, depth_budget - 1, else_budget)
        return If(condition, then_branch, else_branch)
    return Action(rng.choice(HEURISTICS))


def random_program(
    rng: random.Random, max_depth: int = MAX_DEPTH, max_tokens: int = MAX_TOKENS
) -> Program:
    """Sample a complete program from the grammar with fresh uniform weights."""
    return Program(_random_node(rng, max_depth, max_tokens))


def _paths(node: Node, prefix: tuple[str, ...] = ()) -> list[tuple[str, ...]]:
    """Pre-order list of node paths; 't'/'e' select then/else branches."""
    out = [prefix]
    if isinstance(node, If):
        out.extend(_paths(node.then_branch, prefix + ("t",)))
        out.extend(_paths(node.else_branch, prefix + ("e",)))
    return out


def _subtree(node: Node, path: tuple[str, ...]) -> Node:
    for branch in path:
        node = node.then_branch if branch == "t" else node.else_branch
    return node


def _replace(node: Node, path: tuple[str, ...], new: Node) -> Node:
    if not path:
        return new
    head, rest = path[0], path[1:]
    if head == "t":
        return If(node.condition, _replace(node.then_branch, rest, new), node.else_branch)
    return If(node.condition, node.then_branch, _replace(node.else_branch, rest, new))


def mutate(
    program: Program,
    rng: random.Random,
    max_depth: int = MAX_DEPTH,
    max_tokens: int = MAX_TOKENS,
) -> Program:
    """Mutate one uniformly chosen node; the input program is left unchanged.

    An if-node has its branches deleted and is re-expanded from the grammar
    (fresh weights, within the depth and token budget remaining at its
    position); an action leaf swaps its rule for a different one.
    """
    paths = _paths(program.root)
    path = paths[rng.randrange(len(paths))]
    target = _subtree(program.root, path)
    if isinstance(target, Action):
        options = [h for h in HEURISTICS if h is not target.heuristic]
        new_node: Node = Action(options[rng.randrange(len(options))])
    else:
        depth_budget = max_depth - len(path)
        token_budget = max_tokens - (node_tokens(program.root) - node_tokens(target))
        new_node = _random_node(rng, depth_budget, token_budget)
    return Program(_replace(program.root, path, new_node))


def get_params(program: Program) -> tuple[float, ...]:
    """All condition weights flattened in pre-order."""
    values: list[float] = []

    def walk(node: Node):
        if isinstance(node, If):
            values.extend(node.condition.weights)
            walk(node.then_branch)
            walk(node.else_branch)

    walk(program.root)
    return tuple(values)


def set_params(program: Program, params: tuple[float, ...]) -> Program:
    """Rebuild the program with the given pre-order flattened weights."""
    expected = WEIGHTS_LEN * if_count(program)
    if len(params) != expected:
        raise ValueError(f"expected {expected} parameters, got {len(params)}")
    it = iter(range(0, expected, WEIGHTS_LEN))

    def walk(node: Node) -> Node:
        if isinstance(node, Action):
            return node
        offset = next(it)
        condition = Condition(tuple(params[offset:offset + WEIGHTS_LEN]))
        return If(condition, walk(node.then_branch), walk(node.else_branch))

    return Program(walk(program.root))


def _format_condition(condition: Condition) -> str:
    parts = [f"{condition.weights[0]:.2f}"]
    for name, w in zip(CONCEPT_NAMES, condition.weights[1:]):
        if w == 0.0:
            continue
        sign = "+" if w > 0 else "-"
        parts.append(f"{sign} {abs(w):.2f}·{name}")
    return " ".join(parts)


def _pretty(node: Node, indent: int) -> str:
    if isinstance(node, Action):
        return node.heuristic.value
    pad = "    " * (indent + 1)
    return (
        f"if ({_format_condition(node.condition)} > 0):\n"
        f"{pad}then {_pretty(node.then_branch, indent + 1)}\n"
        f"{pad}else {_pretty(node.else_branch, indent + 1)}"
    )


def pretty_print(program: Program) -> str:
    """Human-readable nested if/then/else with coefficients to two decimals."""
    return _pretty(program.root, 0)


def _node_to_obj(node: Node):
    if isinstance(node, Action):
        return {"kind": "action", "heuristic": node.heuristic.value}
    return {
        "kind": "if",
        "weights": list(node.condition.weights),
        "then": _node_to_obj(node.then_branch),
        "else": _node_to_obj(node.else_branch),
    }


def serialize(program: Program) -> str:
    """Lossless JSON rendering of the program tree."""
    return json.dumps(_node_to_obj(program.root), indent=2) + "\n"


def _node_from_obj(obj) -> Node:
    if not isinstance(obj, dict):
        raise PolicyFormatError(f"expected an object node, got {type(obj).__name__}")
    kind = obj.get("kind")
    if kind == "action":
        name = obj.get("heuristic")
        try:
            return Action(Heuristic.parse(str(name)))
        except ValueError as exc:
            raise PolicyFormatError(str(exc)) from None
    if kind == "if":
        weights = obj.get("weights")
        if not isinstance(weights, list) or len(weights) != WEIGHTS_LEN:
            raise PolicyFormatError(
                f"condition needs {WEIGHTS_LEN} weights, got "
                f"{len(weights) if isinstance(weights, list) else weights!r}"
            )
        if "then" not in obj or "else" not in obj:
            raise PolicyFormatError("if-node needs 'then' and 'else' branches")
        try:
            condition = Condition(tuple(float(w) for w in weights))
        except (TypeError, ValueError) as exc:
            raise PolicyFormatError(str(exc)) from None
        return If(condition, _node_from_obj(obj["then"]), _node_from_obj(obj["else"]))
    raise PolicyFormatError(f"unknown node kind {kind!r}")


def deserialize(text: str) -> Program:
    """Parse a serialized program; structural violations are rejected."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PolicyFormatError(f"invalid JSON: {exc}") from None
    root = _node_from_obj(obj)
    try:
        return Program(root)
    except ValueError as exc:
        raise PolicyFormatError(str(exc)) from None
