"""Encoder-only transformer for direct 24-step forecasting, in numpy with manual gradients.

Layout per layer (post-norm)::

    h = LN1(h + Dropout(MHA(h)))
    h = LN2(h + Dropout(W2 relu(W1 h + b1) + b2))

Input embedding is a linear map plus sinusoidal positional encoding; the
head flattens the final sequence and maps it linearly to ``horizon`` outputs.
"""
from dataclasses import asdict, dataclass

import numpy as np

LN_EPS = 1e-5


@dataclass(frozen=True)
class AttentionModelConfig:
    n_features: int
    layers: int = 3
    heads: int = 4
    model_dim: int = 64
    feedforward_dim: int = 256
    dropout: float = 0.1
    window: int = 24
    horizon: int = 24
    activation: str = "relu"

    def __post_init__(self):
        if self.model_dim % self.heads:
            raise ValueError("model_dim must be divisible by heads")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.activation != "relu":
            raise ValueError("only relu activation is supported")
        for name in ("n_features", "layers", "heads", "model_dim", "feedforward_dim", "window",
                     "horizon"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def to_dict(self):
        return asdict(self)


SOLAR_LAYERS = 3
PRICE_LAYERS = 4


def positional_encoding(length, dim):
    pos = np.arange(length)[:, None]
    i = np.arange(dim)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / dim)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


def param_shapes(cfg):
    """Ordered parameter names and shapes; this order is also the checkpoint order."""
    D, F = cfg.model_dim, cfg.feedforward_dim
    out = [("emb.W", (cfg.n_features, D)), ("emb.b", (D,))]
    for l in range(cfg.layers):
        p = f"L{l}."
        for m in ("q", "k", "v", "o"):
            out += [(p + "W" + m, (D, D)), (p + "b" + m, (D,))]
        out += [(p + "ln1.g", (D,)), (p + "ln1.b", (D,)),
                (p + "W1", (D, F)), (p + "b1", (F,)), (p + "W2", (F, D)), (p + "b2", (D,)),
                (p + "ln2.g", (D,)), (p + "ln2.b", (D,))]
    out += [("head.W", (cfg.window * D, cfg.horizon)), ("head.b", (cfg.horizon,))]
    return out


def init_params(cfg, seed=0):
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in param_shapes(cfg):
        leaf = name.rsplit(".", 1)[-1]
        if leaf == "g":
            params[name] = np.ones(shape)
        elif len(shape) == 2:
            lim = np.sqrt(6.0 / (shape[0] + shape[1]))
            params[name] = rng.uniform(-lim, lim, shape)
        else:
            params[name] = np.zeros(shape)
    return params


def _ln_forward(x, g, b):
    mu = x.mean(-1, keepdims=True)
    var = x.var(-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv
    return xhat * g + b, (xhat, inv)


def _ln_backward(dy, g, cache):
    xhat, inv = cache
    n = xhat.shape[-1]
    dg = np.sum(dy * xhat, axis=tuple(range(dy.ndim - 1)))
    db = np.sum(dy, axis=tuple(range(dy.ndim - 1)))
    dxh = dy * g
    dx = inv / n * (n * dxh - dxh.sum(-1, keepdims=True)
                    - xhat * np.sum(dxh * xhat, -1, keepdims=True))
    return dx, dg, db


def _split(x, heads):
    B, T, D = x.shape
    return x.reshape(B, T, heads, D // heads).transpose(0, 2, 1, 3)


def _merge(x):
    B, h, T, dk = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, T, h * dk)


def _dropout(x, rate, rng):
    if rate <= 0.0 or rng is None:
        return x, None
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


class TransformerForecaster:
    """Parameters plus forward/backward passes; ``params`` maps name -> array."""

    def __init__(self, cfg, params=None, seed=0):
        self.cfg = cfg
        self.params = params if params is not None else init_params(cfg, seed)
        expected = dict(param_shapes(cfg))
        if set(self.params) != set(expected):
            raise ValueError("parameter names do not match the configuration")
        for k, shape in expected.items():
            if self.params[k].shape != shape:
                raise ValueError(f"{k}: shape {self.params[k].shape}, want {shape}")
        self._pe = positional_encoding(cfg.window, cfg.model_dim)

    def forward(self, X, rng=None):
        """Predict ``(B, horizon)`` from ``(B, window, n_features)``.

        Dropout is applied only when an ``rng`` is given (training mode).
        Returns ``(y, cache)``.
        """
        cfg, P = self.cfg, self.params
        X = np.asarray(X, dtype=float)
        if X.ndim != 3 or X.shape[1:] != (cfg.window, cfg.n_features):
            raise ValueError(f"window shape {X.shape[1:]} != {(cfg.window, cfg.n_features)}")
        rate = cfg.dropout
        h = X @ P["emb.W"] + P["emb.b"] + self._pe
        caches = []
        scale = 1.0 / np.sqrt(cfg.model_dim // cfg.heads)
        for l in range(cfg.layers):
            p = f"L{l}."
            q = _split(h @ P[p + "Wq"] + P[p + "bq"], cfg.heads)
            k = _split(h @ P[p + "Wk"] + P[p + "bk"], cfg.heads)
            v = _split(h @ P[p + "Wv"] + P[p + "bv"], cfg.heads)
            s = (q @ k.transpose(0, 1, 3, 2)) * scale
            s = s - s.max(-1, keepdims=True)
            e = np.exp(s)
            att = e / e.sum(-1, keepdims=True)
            o = _merge(att @ v)
            a = o @ P[p + "Wo"] + P[p + "bo"]
            a, m1 = _dropout(a, rate, rng)
            h1, ln1 = _ln_forward(h + a, P[p + "ln1.g"], P[p + "ln1.b"])
            pre = h1 @ P[p + "W1"] + P[p + "b1"]
            act = np.maximum(pre, 0.0)
            f = act @ P[p + "W2"] + P[p + "b2"]
            f, m2 = _dropout(f, rate, rng)
            h2, ln2 = _ln_forward(h1 + f, P[p + "ln2.g"], P[p + "ln2.b"])
            caches.append((h, q, k, v, att, o, m1, h1, ln1, pre, act, m2, ln2))
            h = h2
        flat = h.reshape(h.shape[0], -1)
        y = flat @ P["head.W"] + P["head.b"]
        return y, (X, caches, flat, scale)

    def predict(self, X, batch=512):
        X = np.asarray(X, dtype=float)
        out = [self.forward(X[i:i + batch])[0] for i in range(0, len(X), batch)]
        return np.concatenate(out) if out else np.zeros((0, self.cfg.horizon))

    def backward(self, dy, cache):
        """Gradients of a scalar loss given ``dy = dL/dy``."""
        cfg, P = self.cfg, self.params
        X, caches, flat, scale = cache
        g = {}
        g["head.W"] = flat.T @ dy
        g["head.b"] = dy.sum(0)
        B = dy.shape[0]
        dh = (dy @ P["head.W"].T).reshape(B, cfg.window, cfg.model_dim)
        for l in reversed(range(cfg.layers)):
            p = f"L{l}."
            h, q, k, v, att, o, m1, h1, ln1, pre, act, m2, ln2 = caches[l]
            dsum2, g[p + "ln2.g"], g[p + "ln2.b"] = _ln_backward(dh, P[p + "ln2.g"], ln2)
            df = dsum2 if m2 is None else dsum2 * m2
            g[p + "W2"] = act.reshape(-1, act.shape[-1]).T @ df.reshape(-1, df.shape[-1])
            g[p + "b2"] = df.sum((0, 1))
            dact = df @ P[p + "W2"].T
            dpre = dact * (pre > 0)
            g[p + "W1"] = h1.reshape(-1, h1.shape[-1]).T @ dpre.reshape(-1, dpre.shape[-1])
            g[p + "b1"] = dpre.sum((0, 1))
            dh1 = dsum2 + dpre @ P[p + "W1"].T
            dsum1, g[p + "ln1.g"], g[p + "ln1.b"] = _ln_backward(dh1, P[p + "ln1.g"], ln1)
            da = dsum1 if m1 is None else dsum1 * m1
            g[p + "Wo"] = o.reshape(-1, o.shape[-1]).T @ da.reshape(-1, da.shape[-1])
            g[p + "bo"] = da.sum((0, 1))
            do = _split(da @ P[p + "Wo"].T, cfg.heads)
            datt = do @ v.transpose(0, 1, 3, 2)
            dv = att.transpose(0, 1, 3, 2) @ do
            ds = att * (datt - np.sum(datt * att, -1, keepdims=True)) * scale
            dq = ds @ k
            dk = ds.transpose(0, 1, 3, 2) @ q
            dh_in = dsum1
            hf = h.reshape(-1, h.shape[-1])
            for name, dproj in (("q", dq), ("k", dk), ("v", dv)):
                dm = _merge(dproj)
                g[p + "W" + name] = hf.T @ dm.reshape(-1, dm.shape[-1])
                g[p + "b" + name] = dm.sum((0, 1))
                dh_in = dh_in + dm @ P[p + "W" + name].T
            dh = dh_in
        g["emb.W"] = X.reshape(-1, X.shape[-1]).T @ dh.reshape(-1, dh.shape[-1])
        g["emb.b"] = dh.sum((0, 1))
        return g

    def loss_and_grad(self, X, Y, rng=None):
        """Mean squared error over all outputs and its gradient."""
        y, cache = self.forward(X, rng)
        r = y - Y
        loss = float(np.mean(r * r))
        dy = 2.0 * r / r.size
        return loss, self.backward(dy, cache)
