"""Central finite-difference verification of every differentiable path.

The convention throughout: central differences with eps = 1e-5 in double
precision, relative error |a - fd| / max(|a|, |fd|, FLOOR). Central
differences carry roundoff of about macheps * |loss| / eps (~1e-10 for these
losses), so coordinates whose true gradient sits near that level cannot be
resolved at all; the denominator floor of 1e-5 treats them as an absolute
tolerance of 1e-9 at the 1e-4 relative tolerance, which still catches any
real defect (a sign flip or dropped term at the 1e-8 gradient scale shows up
three orders of magnitude above it).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .config import Config
from .network import NavModel
from .world import random_observation

EPS = 1e-5
TOLERANCE = 1e-4
FLOOR = 1e-5  # relative-error denominator floor; see module docstring


@dataclass
class CheckResult:
    name: str
    max_rel_err: float
    tolerance: float = TOLERANCE

    @property
    def ok(self) -> bool:
        return self.max_rel_err < self.tolerance

    def line(self) -> str:
        status = "ok" if self.ok else "FAIL"
        return f"{status:4s}  {self.name:48s} max rel err {self.max_rel_err:.3e}"


def check_gradient(loss_fn: Callable[[], Tensor], param: Tensor,
                   rng: np.random.Generator, n_coords: int = 20,
                   eps: float = EPS) -> float:
    """Max relative error between analytic grad and central differences at
    n_coords random coordinates of one parameter tensor."""
    param.zero_grad()
    ad.backward(loss_fn())
    analytic = param.grad.copy()
    param.zero_grad()
    rows, cols = param.values.shape
    total = rows * cols
    count = min(n_coords, total)
    picks = rng.choice(total, size=count, replace=False)
    worst = 0.0
    for flat in picks:
        i, j = divmod(int(flat), cols)
        orig = param.values[i, j]
        param.values[i, j] = orig + eps
        plus = loss_fn().item()
        param.values[i, j] = orig - eps
        minus = loss_fn().item()
        param.values[i, j] = orig
        fd = (plus - minus) / (2.0 * eps)
        a = analytic[i, j]
        err = abs(a - fd) / max(abs(a), abs(fd), FLOOR)
        worst = max(worst, err)
    return worst


def _op_checks(rng: np.random.Generator) -> List[CheckResult]:
    results = []

    def run(name, make_loss, param, n=20):
        results.append(CheckResult(name, check_gradient(make_loss, param, rng, n)))

    a = ad.parameter(rng.normal(0.0, 1.0, (3, 3)))
    b = Tensor(rng.normal(0.0, 1.0, (3, 3)))
    run("matmul (dA of sum(A.B))", lambda: ad.sum_all(ad.matmul(a, b)), a, 9)

    w = ad.parameter(rng.normal(0.0, 1.0, (4, 5)))
    x = Tensor(rng.normal(0.0, 1.0, (6, 4)))
    v = Tensor(rng.normal(0.0, 1.0, (6, 5)))
    # keep relu inputs away from the kink so central differences are valid
    w_relu = ad.parameter(np.where(np.abs(w.values) < 0.2, 0.5, w.values))
    run("relu", lambda: ad.sum_all(ad.mul(ad.relu(ad.matmul(x, w_relu)), v)), w_relu)
    run("sigmoid", lambda: ad.sum_all(ad.mul(ad.sigmoid(ad.matmul(x, w)), v)), w)
    run("tanh", lambda: ad.sum_all(ad.mul(ad.tanh(ad.matmul(x, w)), v)), w)
    run("add/mul/scale chain",
        lambda: ad.sum_all(ad.scale(ad.mul(ad.add(ad.matmul(x, w), v), v), 0.7)), w)

    row = ad.parameter(rng.normal(0.0, 1.0, (1, 5)))
    run("row broadcast add",
        lambda: ad.sum_all(ad.mul(ad.add(ad.matmul(x, w), row), v)), row, 5)

    sm_in = ad.parameter(rng.normal(0.0, 1.0, (2, 4)))
    sv = Tensor(rng.normal(0.0, 1.0, (2, 4)))
    run("softmax_rows jvp", lambda: ad.sum_all(ad.mul(ad.softmax_rows(sm_in), sv)),
        sm_in, 8)

    run("concat_cols",
        lambda: ad.sum_all(ad.mul(ad.concat_cols(ad.matmul(x, w), ad.matmul(x, w)),
                                  Tensor(np.ones((6, 10))))), w)

    logits = ad.parameter(rng.normal(0.0, 1.0, (1, 6)))
    run("cross_entropy", lambda: ad.cross_entropy(logits, 3), logits, 6)
    run("entropy", lambda: ad.entropy_rows(logits), logits, 6)

    mr = ad.parameter(rng.normal(0.0, 1.0, (5, 4)))
    run("mean_rows", lambda: ad.sum_all(ad.mean_rows(mr)), mr)
    tr = ad.parameter(rng.normal(0.0, 1.0, (3, 5)))
    tv = Tensor(rng.normal(0.0, 1.0, (5, 3)))
    run("transpose", lambda: ad.sum_all(ad.mul(ad.transpose(tr), tv)), tr)
    return results


def _model_checks(rng: np.random.Generator, cfg: Optional[Config] = None,
                  n_coords: int = 20, unroll: int = 3) -> List[CheckResult]:
    """FD over every parameter block of the fully composed network.

    Loss covers both heads after an LSTM unroll with target-conditioned
    observations, so all representation and policy blocks are on the path.
    """
    cfg = cfg or Config()
    model = NavModel(cfg, np.random.default_rng(int(rng.integers(2 ** 31))))
    observations = [random_observation(cfg, rng, visible_prob=0.7)
                    for _ in range(unroll)]
    probe = Tensor(rng.normal(0.0, 1.0, (1, 6)))

    def loss_fn():
        lstm = model.initial_lstm()
        prev = None
        total = None
        for step, obs in enumerate(observations):
            state = model.representation(obs, target=0)
            logits, value, lstm = model.policy_step(state, prev, lstm)
            term = ad.add(ad.sum_all(ad.mul(logits, probe)),
                          ad.add(value, ad.cross_entropy(logits, step % 6)))
            total = term if total is None else ad.add(total, term)
            prev = (step + 1) % 6
        return total

    results = []
    coord_rng = np.random.default_rng(int(rng.integers(2 ** 31)))
    for name in model.active_param_names():
        if name.startswith("imitation"):
            continue
        err = check_gradient(loss_fn, model.params[name], coord_rng, n_coords)
        results.append(CheckResult(f"model[{name}]", err))

    im_model = model

    def imitation_loss():
        state = im_model.representation(observations[0], target=1)
        return ad.cross_entropy(im_model.imitation_logits(state), 2)

    for name in im_model.imitation_param_names():
        err = check_gradient(imitation_loss, im_model.params[name], coord_rng, 12)
        results.append(CheckResult(f"model[{name}]", err))

    # the actor-critic segment loss over a frozen transition: policy-gradient
    # term with the advantage held constant, value MSE, entropy bonus
    advantage = 1.3
    target_return = 0.7

    def policy_loss():
        lstm = model.initial_lstm()
        state = model.representation(observations[0], target=0)
        logits, value, lstm = model.policy_step(state, None, lstm)
        pg = ad.scale(ad.cross_entropy(logits, 2), advantage)
        diff = ad.sub(value, ad.Tensor([[target_return]]))
        return ad.sub(ad.add(pg, ad.scale(ad.mul(diff, diff), 0.5)),
                      ad.scale(ad.entropy_rows(logits), 0.01))

    for name in ("actor_w", "critic_w", "lstm_w_i", "hgraph_embed"):
        err = check_gradient(policy_loss, model.params[name], coord_rng, 12)
        results.append(CheckResult(f"policy-loss[{name}]", err))
    return results


def run_suite(seed: int = 0, cfg: Optional[Config] = None,
              n_coords: int = 20) -> List[CheckResult]:
    rng = np.random.default_rng(seed)
    return _op_checks(rng) + _model_checks(rng, cfg, n_coords=n_coords)


def report(results: Sequence[CheckResult]) -> str:
    lines = [r.line() for r in results]
    n_bad = sum(1 for r in results if not r.ok)
    lines.append(f"{len(results) - n_bad}/{len(results)} gradient checks passed "
                 f"(tolerance {TOLERANCE:g}, eps {EPS:g})")
    return "\n".join(lines)
