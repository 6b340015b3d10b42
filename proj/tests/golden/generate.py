#!/usr/bin/env python3
# Copyright 2026 The mvit Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ==============================================================================
"""Writes golden fixtures for `mvit verify`.

Reference outputs come from PyTorch in float64 and are stored as float32 in
the engine's container format. Run from anywhere:

    python3 tests/golden/generate.py --out tests/golden/fixtures --seed 7
"""

import argparse
import json
import math
import os
import struct

import numpy as np
import torch
import torch.nn.functional as F

MAGIC = b"MVIT"
VERSION = 1
EPS = float(np.float32(1e-5))  # the engine stores eps as float32

KERNEL_TOL = dict(rtol=1e-5, atol=1e-6)
BLOCK_TOL = dict(rtol=1e-4, atol=1e-5)
E2E_TOL = dict(rtol=1e-3, atol=1e-4)


# --------------------------------------------------------------------------
# container format


def encode(tensors):
    out = bytearray(MAGIC + struct.pack("<II", VERSION, len(tensors)))
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f4")
        raw = name.encode("utf-8")
        out += struct.pack("<H", len(raw)) + raw
        out += struct.pack("<BB", 0, arr.ndim)
        out += struct.pack("<%dI" % arr.ndim, *arr.shape)
        out += arr.tobytes()
    return bytes(out)


def decode(data):
    assert data[:4] == MAGIC
    version, count = struct.unpack_from("<II", data, 4)
    assert version == VERSION
    pos, out = 12, {}
    for _ in range(count):
        (n,) = struct.unpack_from("<H", data, pos)
        name = data[pos + 2:pos + 2 + n].decode("utf-8")
        pos += 2 + n
        dtype, rank = struct.unpack_from("<BB", data, pos)
        assert dtype == 0
        dims = struct.unpack_from("<%dI" % rank, data, pos + 2)
        pos += 2 + 4 * rank
        size = 4 * int(np.prod(dims))
        out[name] = np.frombuffer(data[pos:pos + size], dtype="<f4").reshape(dims)
        pos += size
    assert pos == len(data) and name not in list(out)[:-1]
    return out


def fnv1a64(data):
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return "fnv1a64:%016x" % h


# --------------------------------------------------------------------------
# reference ops (float64)


def t64(a):
    return torch.from_numpy(np.asarray(a, dtype=np.float32).astype(np.float64))


def bn(x, p, prefix):
    g, b, m, v = (t64(p[prefix + k]) for k in ("gamma", "beta", "mean", "var"))
    shape = (1, -1, 1, 1)
    return (x - m.view(shape)) / torch.sqrt(v.view(shape) + EPS) * g.view(shape) + b.view(shape)


def conv(x, p, prefix, stride=1, padding=0, groups=1):
    bias = p.get(prefix + "bias")
    return F.conv2d(x, t64(p[prefix + "weight"]), None if bias is None else t64(bias),
                    stride=stride, padding=padding, groups=groups)


def gelu(x):
    return F.gelu(x)


def attend(q, k, v):
    n, cq, h, w = q.shape
    qt = q.reshape(n, cq, -1).transpose(1, 2)
    kt = k.reshape(n, k.shape[1], -1).transpose(1, 2)
    vt = v.reshape(n, v.shape[1], -1).transpose(1, 2)
    attn = torch.softmax(qt @ kt.transpose(1, 2) / math.sqrt(cq), dim=-1)
    return (attn @ vt).transpose(1, 2).reshape(n, v.shape[1], h, w)


def esha_dims(cfg):
    cv = int(math.floor(cfg["ratio"] * cfg["channels"] + 0.5))
    return cfg["query_dim"], cfg["key_dim"], cv, cfg["channels"] - cv


def esha_project(x, p, cfg):
    proj = bn(conv(x, p, "w_ip.", padding=1, groups=cfg["groups"]), p, "w_ip.")
    return torch.split(proj, list(esha_dims(cfg)), dim=1)


def spatial_reduce(t, p, prefix, sr):
    if sr == 1:
        return t
    return conv(t, p, prefix, stride=sr, padding=1, groups=t.shape[1])


def esha_forward(x, p, cfg):
    q, k, v, u = esha_project(x, p, cfg)
    k = spatial_reduce(k, p, "sr_k.", cfg["sr"])
    v = spatial_reduce(v, p, "sr_v.", cfg["sr"])
    mixed = torch.cat([attend(q, k, v), gelu(u)], dim=1)
    return bn(conv(mixed, p, "w_op."), p, "w_op.")


def ffn(x, p, prefix):
    h = conv(bn(x, p, prefix + "norm."), p, prefix + "fc1.")
    return conv(gelu(h), p, prefix + "fc2.")


def lam(p, name):
    return t64(p[name]).view(1, -1, 1, 1)


def dw_mixer(x, p, prefix):
    return bn(conv(x, p, prefix + "dw.", padding=1, groups=x.shape[1]), p, prefix + "dw.")


def encoder(x, p, prefix, stage):
    if stage["mixer"] == "esha":
        sub = {k[len(prefix + "mixer."):]: v for k, v in p.items() if k.startswith(prefix + "mixer.")}
        mixed = esha_forward(x, sub, stage["esha"] | {"channels": stage["width"]})
    else:
        mixed = dw_mixer(x, p, prefix + "mixer.")
    x1 = x + lam(p, prefix + "lambda_mixer") * mixed
    return x1 + lam(p, prefix + "lambda_ffn") * ffn(x1, p, prefix + "ffn.")


def patch_embed(x, p, prefix):
    pre = x + lam(p, prefix + "lambda_pre") * ffn(x, p, prefix + "pre_ffn.")
    y = bn(conv(pre, p, prefix + "dw.", stride=2, padding=1, groups=x.shape[1]), p, prefix + "dw.")
    y = bn(conv(y, p, prefix + "pw."), p, prefix + "pw.")
    return y + lam(p, prefix + "lambda_post") * ffn(y, p, prefix + "post_ffn.")


def stem(x, p, layers):
    for i in range(layers):
        x = gelu(bn(conv(x, p, "stem.%d.conv." % i, stride=2, padding=1), p, "stem.%d.bn." % i))
    return x


def head(x, p, prefix):
    pooled = x.mean(dim=(2, 3))
    return pooled @ t64(p[prefix + "weight"]).T + t64(p[prefix + "bias"])


def model_forward(x, p, cfg):
    x = stem(x, p, len(cfg["stem_ramp"]))
    for s, stage in enumerate(cfg["stages"], start=1):
        if s > 1:
            x = patch_embed(x, p, "stage%d.embed." % s)
        for i in range(stage["depth"]):
            x = encoder(x, p, "stage%d.block%d." % (s, i), stage)
    return head(x, p, "head.fc.")


# --------------------------------------------------------------------------
# parameter layouts (mirrors the engine's canonical names)


class Params:
    def __init__(self, rng):
        self.rng = rng
        self.p = {}

    def _u(self, lo, hi, shape):
        return self.rng.uniform(lo, hi, size=shape).astype(np.float32)

    def conv(self, prefix, cout, cin_g, k, bias):
        fan_in = cin_g * k * k
        self.p[prefix + "weight"] = (self.rng.standard_normal((cout, cin_g, k, k)) / math.sqrt(fan_in)).astype(np.float32)
        if bias:
            self.p[prefix + "bias"] = self._u(-0.1, 0.1, (cout,))

    def bn(self, prefix, c):
        self.p[prefix + "gamma"] = self._u(0.5, 1.5, (c,))
        self.p[prefix + "beta"] = self._u(-0.1, 0.1, (c,))
        self.p[prefix + "mean"] = self._u(-0.1, 0.1, (c,))
        self.p[prefix + "var"] = self._u(0.5, 1.5, (c,))

    def scale(self, name, c):
        self.p[name] = self._u(0.5, 1.5, (c,))

    def linear(self, prefix, out_f, in_f):
        self.p[prefix + "weight"] = (self.rng.standard_normal((out_f, in_f)) / math.sqrt(in_f)).astype(np.float32)
        self.p[prefix + "bias"] = self._u(-0.1, 0.1, (out_f,))

    def ffn(self, prefix, c, alpha=2):
        self.bn(prefix + "norm.", c)
        self.conv(prefix + "fc1.", alpha * c, c, 1, True)
        self.conv(prefix + "fc2.", c, alpha * c, 1, True)

    def esha(self, prefix, cfg):
        c = cfg["channels"]
        cq, ck, cv, cu = esha_dims(cfg)
        proj = cq + ck + cv + cu
        assert c % cfg["groups"] == 0 and proj % cfg["groups"] == 0, "divisibility"
        self.conv(prefix + "w_ip.", proj, c // cfg["groups"], 3, True)
        self.bn(prefix + "w_ip.", proj)
        if cfg["sr"] > 1:
            self.conv(prefix + "sr_k.", ck, 1, 3, True)
            self.conv(prefix + "sr_v.", cv, 1, 3, True)
        self.conv(prefix + "w_op.", c, c, 1, True)
        self.bn(prefix + "w_op.", c)

    def dw_mixer(self, prefix, c):
        self.conv(prefix + "dw.", c, 1, 3, False)
        self.bn(prefix + "dw.", c)

    def encoder(self, prefix, stage, alpha=2):
        c = stage["width"]
        if stage["mixer"] == "esha":
            self.esha(prefix + "mixer.", stage["esha"] | {"channels": c})
        else:
            self.dw_mixer(prefix + "mixer.", c)
        self.ffn(prefix + "ffn.", c, alpha)
        self.scale(prefix + "lambda_mixer", c)
        self.scale(prefix + "lambda_ffn", c)

    def patch_embed(self, prefix, cin, cout, alpha=2):
        self.ffn(prefix + "pre_ffn.", cin, alpha)
        self.scale(prefix + "lambda_pre", cin)
        self.conv(prefix + "dw.", cin, 1, 3, False)
        self.bn(prefix + "dw.", cin)
        self.conv(prefix + "pw.", cout, cin, 1, False)
        self.bn(prefix + "pw.", cout)
        self.ffn(prefix + "post_ffn.", cout, alpha)
        self.scale(prefix + "lambda_post", cout)

    def stem(self, ramp, cin=3):
        for i, c in enumerate(ramp):
            self.conv("stem.%d.conv." % i, c, cin, 3, False)
            self.bn("stem.%d.bn." % i, c)
            cin = c


# --------------------------------------------------------------------------
# fixture writer


class Writer:
    def __init__(self, out_dir, seed):
        self.out = out_dir
        self.seed = seed
        self.cases = []
        os.makedirs(out_dir, exist_ok=True)

    def rng(self):
        return np.random.default_rng([self.seed, len(self.cases)])

    def _write(self, rel, tensors):
        data = encode(tensors)
        assert decode(data).keys() == tensors.keys()
        with open(os.path.join(self.out, rel), "wb") as f:
            f.write(data)
        return rel

    def _write_text(self, rel, text):
        with open(os.path.join(self.out, rel), "w") as f:
            f.write(text)

    def case(self, name, op, inputs, expected, tol, config=None, params=None, seed=None):
        files = []
        for i, arr in enumerate(inputs):
            files.append(self._write("%s.in%d.mvt" % (name, i), {"tensor": arr}))
        if params is not None:
            files.append(self._write("%s.params.mvitw" % name, params))
        if isinstance(expected, dict):
            out = self._write("%s.expected.mvitw" % name, {k: to32(v) for k, v in expected.items()})
        else:
            out = self._write("%s.expected.mvt" % name, {"output": to32(expected)})
        self.cases.append(self._entry(name, op, files, out, tol, config, seed))

    def _entry(self, name, op, files, out, tol, config, seed):
        sums = {}
        for rel in files + [out]:
            with open(os.path.join(self.out, rel), "rb") as f:
                sums[rel] = fnv1a64(f.read())
        return {"name": name, "op": op, "config": config or {}, "inputs": files, "expected": out,
                "rtol": tol["rtol"], "atol": tol["atol"], "seed": self.seed, "checksums": sums}

    def finish(self):
        manifest = {"version": 1, "cases": self.cases}
        self._write_text("manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def to32(t):
    return t.detach().numpy().astype(np.float32) if isinstance(t, torch.Tensor) else np.asarray(t, np.float32)


def normal(rng, shape, scale=1.0):
    return (rng.standard_normal(shape) * scale).astype(np.float32)


# --------------------------------------------------------------------------
# cases


TINY_ESHA = {"channels": 32, "query_dim": 8, "key_dim": 8, "ratio": 0.25, "groups": 4, "sr": 2}


def kernel_cases(w):
    # convolutions
    for name, shape, cout, k, stride, pad, groups, bias in [
        ("conv2d_grouped", (1, 4, 8, 8), 8, 3, 1, 1, 2, True),
        ("conv2d_dense_stride2", (1, 3, 9, 9), 8, 3, 2, 1, 1, True),
        ("conv2d_pointwise", (2, 16, 5, 5), 24, 1, 1, 0, 1, False),
        ("conv2d_group4_rect", (1, 8, 7, 5), 12, 3, 1, 1, 4, False),
    ]:
        rng = w.rng()
        x = normal(rng, shape)
        pr = Params(rng)
        pr.conv("", cout, shape[1] // groups, k, bias)
        y = conv(t64(x), pr.p, "", stride, pad, groups)
        w.case(name, "conv2d", [x], y, KERNEL_TOL, {"stride": stride, "padding": pad, "groups": groups}, pr.p)
    for name, shape, stride, bias in [("depthwise_s2", (1, 8, 6, 6), 2, False), ("depthwise_s1_bias", (2, 6, 5, 5), 1, True)]:
        rng = w.rng()
        x = normal(rng, shape)
        pr = Params(rng)
        pr.conv("", shape[1], 1, 3, bias)
        y = conv(t64(x), pr.p, "", stride, 1, shape[1])
        w.case(name, "depthwise_conv2d", [x], y, KERNEL_TOL, {"stride": stride, "padding": 1}, pr.p)

    rng = w.rng()
    x = normal(rng, (2, 6, 4, 4))
    pr = Params(rng)
    pr.bn("", 6)
    w.case("batch_norm2d", "batch_norm2d", [x], bn(t64(x), pr.p, ""), KERNEL_TOL, {"eps": 1e-5}, pr.p)

    rng = w.rng()
    x = normal(rng, (1, 4, 8, 8), 3.0)
    w.case("gelu", "gelu", [x], gelu(t64(x)), KERNEL_TOL)
    one = np.ones((1, 1, 1, 1), np.float32)
    w.case("gelu_at_one", "gelu", [one], gelu(t64(one)), dict(rtol=1e-6, atol=0.0))

    rng = w.rng()
    x = normal(rng, (7, 13), 5.0)
    w.case("softmax", "softmax", [x], torch.softmax(t64(x), dim=-1), dict(rtol=1e-5, atol=1e-7))

    rng = w.rng()
    a, b = normal(rng, (16, 48)), normal(rng, (48, 25))
    w.case("matmul", "matmul", [a, b], t64(a) @ t64(b), KERNEL_TOL)

    rng = w.rng()
    x = normal(rng, (2, 5, 3, 7))
    w.case("global_avg_pool", "global_avg_pool", [x], t64(x).mean(dim=(2, 3), keepdim=True), KERNEL_TOL)

    rng = w.rng()
    parts = [normal(rng, (2, c, 3, 4)) for c in (1, 3, 2)]
    w.case("channel_concat", "channel_concat", parts, np.concatenate(parts, axis=1), dict(rtol=0.0, atol=0.0))

    rng = w.rng()
    x = normal(rng, (1, 10, 3, 3))
    pieces = np.split(x, [2, 5], axis=1)
    w.case("channel_split", "channel_split", [x], {"part%d" % i: p for i, p in enumerate(pieces)},
           dict(rtol=0.0, atol=0.0), {"sizes": [2, 3, 5]})


def esha_cases(w):
    rng = w.rng()
    x = normal(rng, (1, 32, 4, 4))
    pr = Params(rng)
    pr.esha("", TINY_ESHA)
    q, k, v, u = esha_project(t64(x), pr.p, TINY_ESHA)
    w.case("esha_project", "esha_project", [x], {"q": q, "k": k, "v": v, "u": u}, KERNEL_TOL,
           {"esha": TINY_ESHA}, pr.p)

    rng = w.rng()
    x = normal(rng, (1, 8, 4, 4))
    pr = Params(rng)
    pr.conv("", 8, 1, 3, True)
    w.case("spatial_reduce", "spatial_reduce", [x], spatial_reduce(t64(x), pr.p, "", 2), KERNEL_TOL, {"sr": 2}, pr.p)

    rng = w.rng()
    q, k, v = normal(rng, (2, 8, 4, 4)), normal(rng, (2, 8, 2, 2)), normal(rng, (2, 8, 2, 2))
    w.case("esha_attend", "esha_attend", [q, k, v], attend(t64(q), t64(k), t64(v)), KERNEL_TOL, {"esha": TINY_ESHA})

    for name, cfg, shape in [
        ("esha_forward_sr2", TINY_ESHA, (1, 32, 4, 4)),
        ("esha_forward_sr1", TINY_ESHA | {"sr": 1}, (2, 32, 3, 5)),
        ("esha_forward_g1", {"channels": 16, "query_dim": 4, "key_dim": 4, "ratio": 0.25, "groups": 1, "sr": 2},
         (1, 16, 5, 5)),
    ]:
        rng = w.rng()
        x = normal(rng, shape)
        pr = Params(rng)
        pr.esha("", cfg)
        w.case(name, "esha_forward", [x], esha_forward(t64(x), pr.p, cfg), BLOCK_TOL, {"esha": cfg}, pr.p)


def block_cases(w):
    rng = w.rng()
    x = normal(rng, (1, 8, 4, 4))
    pr = Params(rng)
    pr.ffn("", 8)
    w.case("ffn_forward", "ffn_forward", [x], ffn(t64(x), pr.p, ""), KERNEL_TOL, {"alpha": 2}, pr.p)

    rng = w.rng()
    x = normal(rng, (1, 16, 5, 5))
    pr = Params(rng)
    pr.dw_mixer("", 16)
    w.case("dwconv_mixer", "dwconv_mixer", [x], dw_mixer(t64(x), pr.p, ""), KERNEL_TOL, {}, pr.p)

    dw_stage = {"width": 16, "depth": 1, "mixer": "dwconv"}
    esha_stage = {"width": 32, "depth": 1, "mixer": "esha",
                  "esha": {k: v for k, v in TINY_ESHA.items() if k != "channels"}}
    for name, stage, shape in [("encoder_dwconv", dw_stage, (1, 16, 6, 6)), ("encoder_esha", esha_stage, (1, 32, 4, 4))]:
        rng = w.rng()
        x = normal(rng, shape)
        pr = Params(rng)
        pr.encoder("", stage)
        w.case(name, "encoder_forward", [x], encoder(t64(x), pr.p, "", stage), BLOCK_TOL,
               {"stage": stage, "alpha": 2}, pr.p)

    rng = w.rng()
    x = normal(rng, (1, 16, 5, 5))
    pr = Params(rng)
    pr.patch_embed("", 16, 32)
    w.case("patch_embed", "patch_embed", [x], patch_embed(t64(x), pr.p, ""), BLOCK_TOL,
           {"in": 16, "out": 32, "alpha": 2}, pr.p)

    rng = w.rng()
    x = normal(rng, (1, 3, 32, 32))
    pr = Params(rng)
    pr.stem([4, 8, 16, 32])
    w.case("stem", "stem", [x], stem(t64(x), pr.p, 4), BLOCK_TOL, {"ramp": [4, 8, 16, 32]}, pr.p)

    rng = w.rng()
    x = normal(rng, (2, 32, 2, 2))
    pr = Params(rng)
    pr.linear("fc.", 10, 32)
    w.case("classifier_head", "classifier_head", [x], head(t64(x), pr.p, "fc."), KERNEL_TOL, {"classes": 10}, pr.p)


def tiny_model_config(seed):
    return {
        "format_version": 1,
        "variant": "tiny",
        "stages": [
            {"width": 32, "depth": 1, "mixer": "dwconv"},
            {"width": 64, "depth": 1, "mixer": "esha",
             "esha": {"query_dim": 8, "key_dim": 8, "ratio": 0.25, "groups": 4, "sr": 2}},
        ],
        "stem_ramp": [4, 8, 16, 32],
        "alpha": 2,
        "num_classes": 10,
        "resolution": 128,
        "bn_eps": 1e-05,
        "fused": False,
        "seed": seed,
    }


def e2e_case(w):
    cfg = tiny_model_config(w.seed)
    rng = w.rng()
    pr = Params(rng)
    pr.stem(cfg["stem_ramp"])
    prev = None
    for s, stage in enumerate(cfg["stages"], start=1):
        if prev is not None:
            pr.patch_embed("stage%d.embed." % s, prev, stage["width"])
        for i in range(stage["depth"]):
            pr.encoder("stage%d.block%d." % (s, i), stage)
        prev = stage["width"]
    pr.linear("head.fc.", cfg["num_classes"], prev)
    x = normal(rng, (1, 3, cfg["resolution"], cfg["resolution"]))

    files = [w._write("tiny_model.mvitw", pr.p), w._write("tiny_model.input.mvt", {"tensor": x})]
    w._write_text("tiny_model.json", json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    out = w._write("tiny_model.expected.mvt", {"logits": to32(model_forward(t64(x), pr.p, cfg))})
    w.cases.append(w._entry("tiny_model_e2e", "model", files, out, E2E_TOL, {}, None))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    w = Writer(args.out, args.seed)
    kernel_cases(w)
    esha_cases(w)
    block_cases(w)
    e2e_case(w)
    w.finish()
    print("wrote %d cases to %s" % (len(w.cases), args.out))


if __name__ == "__main__":
    main()
