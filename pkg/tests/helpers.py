"""Shared test utilities: central finite differences against autograd."""

import torch


def fd_scalar(fn, tensor: torch.Tensor, index: tuple, h: float = 1e-5) -> float:
    """Central finite difference of scalar-valued fn w.r.t. one tensor entry."""
    with torch.no_grad():
        orig = tensor[index].item()
        tensor[index] = orig + h
        hi = float(fn())
        tensor[index] = orig - h
        lo = float(fn())
        tensor[index] = orig
    return (hi - lo) / (2 * h)


def rel_err(a: float, b: float, floor: float = 1e-8) -> float:
    return abs(a - b) / max(abs(a), abs(b), floor)


def check_param_gradients(fn, tensors, n_probe: int = 4, h: float = 1e-5, tol: float = 1e-3,
                          seed: int = 0):
    """Autograd-vs-FD check on a few randomly probed entries of each tensor.

    fn() must rebuild the scalar loss from scratch (double precision inputs).
    """
    loss = fn()
    grads = torch.autograd.grad(loss, tensors, allow_unused=True)
    gen = torch.Generator().manual_seed(seed)
    worst = 0.0
    for tensor, grad in zip(tensors, grads):
        flat = tensor.reshape(-1)
        n = min(n_probe, flat.numel())
        for idx in torch.randperm(flat.numel(), generator=gen)[:n].tolist():
            index = torch.unravel_index(torch.tensor(idx), tensor.shape)
            index = tuple(i.item() for i in index)
            fd = fd_scalar(fn, tensor.data, index, h=h)
            an = 0.0 if grad is None else grad[index].item()
            if abs(fd) < 1e-10 and abs(an) < 1e-10:
                continue
            err = rel_err(an, fd)
            worst = max(worst, err)
            assert err <= tol, f"grad mismatch at {index}: autograd {an} vs fd {fd} (rel {err})"
    return worst
