#!/usr/bin/env python3
# Copyright 2026 The pixrf Authors
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
"""Trains and exports the toy prototypical-part bundle under tests/fixtures/toy.

Synthetic 2-class 24x24 images: class 0 carries a red square, class 1 a blue
cross, both on a noisy background at random positions, plus an optional green
dot. Parts (square, cross, dot) are annotated by their centres.

Outputs: graph.json, weights.ntsr, bank.ntsr (+ bank.ntsr.json), images.ntsr,
labels.json, annotations.json, embeddings.ntsr (reference embeddings).
"""
import json
import pathlib

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

import ntsr

OUT = pathlib.Path(__file__).resolve().parents[1] / "toy"
SIZE = 24
PER_CLASS = 12
PROTOS_PER_CLASS = 3
D = 8
EPS = 1e-6


def make_images(rng):
    images, labels, ann = [], [], {}
    for cls in (0, 1):
        for k in range(PER_CLASS):
            img = rng.normal(0.0, 0.3, size=(3, SIZE, SIZE)).astype(np.float32)
            r, c = rng.integers(3, SIZE - 3, size=2)
            visible = [False, False, False]
            centers = [None, None, None]
            if cls == 0:
                img[0, r - 2:r + 3, c - 2:c + 3] += 2.0
                visible[0], centers[0] = True, [int(r), int(c)]
            else:
                img[2, r - 2:r + 3, c] += 2.0
                img[2, r, c - 2:c + 3] += 2.0
                visible[1], centers[1] = True, [int(r), int(c)]
            if rng.random() < 0.5:
                while True:
                    dr, dc = rng.integers(2, SIZE - 2, size=2)
                    if abs(dr - r) > 5 or abs(dc - c) > 5:
                        break
                img[1, dr - 1:dr + 2, dc - 1:dc + 2] += 2.0
                visible[2], centers[2] = True, [int(dr), int(dc)]
            iid = f"c{cls}_{k:02d}"
            images.append((iid, img))
            labels.append(cls)
            ann[iid] = {"visible": visible, "centers": centers}
    return images, labels, {"parts": ["square", "cross", "dot"], "images": ann}


def node(id_, op, inputs, **attrs):
    return {"id": id_, "op": op, "attrs": attrs, "inputs": inputs}


GRAPH = {
    "name": "toy@addon",
    "input_shape": [3, SIZE, SIZE],
    "nodes": [
        node("input", "input", []),
        node("conv1", "conv2d", ["input"], kernel=[3, 3], padding=[1, 1], out_channels=8),
        node("relu1", "relu", ["conv1"]),
        node("pool1", "maxpool2d", ["relu1"], kernel=[2, 2], stride=[2, 2]),
        node("conv2", "conv2d", ["pool1"], kernel=[3, 3], padding=[1, 1], out_channels=16),
        node("relu2", "relu", ["conv2"]),
        node("pool2", "maxpool2d", ["relu2"], kernel=[2, 2], stride=[2, 2]),
        node("addon1", "conv2d", ["pool2"], kernel=[1, 1], out_channels=16),
        node("addon_relu", "relu", ["addon1"]),
        node("addon2", "conv2d", ["addon_relu"], kernel=[1, 1], out_channels=D),
        node("embed", "sigmoid", ["addon2"]),
    ],
}


class Net(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(3, 8, 3, padding=1)
        self.conv2 = nn.Conv2d(8, 16, 3, padding=1)
        self.addon1 = nn.Conv2d(16, 16, 1)
        self.addon2 = nn.Conv2d(16, D, 1)
        self.protos = nn.Parameter(torch.rand(2 * PROTOS_PER_CLASS, D, 1, 1))

    def embed(self, x):
        x = F.max_pool2d(F.relu(self.conv1(x)), 2)
        x = F.max_pool2d(F.relu(self.conv2(x)), 2)
        return torch.sigmoid(self.addon2(F.relu(self.addon1(x))))

    def distances(self, z):
        zn = F.normalize(z, dim=1)
        pn = F.normalize(self.protos, dim=1)
        return 1.0 - F.conv2d(zn, pn)  # (N, P, H, W)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(3)
    torch.manual_seed(3)
    images, labels, ann = make_images(rng)
    x = torch.tensor(np.stack([im for _, im in images]))
    y = torch.tensor(labels)
    class_of = torch.arange(2).repeat_interleave(PROTOS_PER_CLASS)
    own = (class_of[None, :] == y[:, None]).float()

    net = Net()
    opt = torch.optim.Adam(net.parameters(), lr=0.01)
    for step in range(400):
        d = net.distances(net.embed(x)).flatten(2).min(dim=2).values  # (N, P)
        s = torch.log(1.0 / (d + EPS) + 1.0)
        logits = s @ F.one_hot(class_of, 2).float()
        xent = F.cross_entropy(logits, y)
        cls = (d + (1 - own) * 10).min(dim=1).values.mean()
        sep = -(d + own * 10).min(dim=1).values.mean()
        loss = xent + 0.8 * cls + 0.08 * sep
        opt.zero_grad()
        loss.backward()
        opt.step()
    with torch.no_grad():
        acc = (logits.argmax(1) == y).float().mean().item()
    print(f"final loss {loss.item():.4f} train acc {acc:.3f}")

    (OUT / "graph.json").write_text(json.dumps(GRAPH, indent=1) + "\n")
    weights = []
    for name in ("conv1", "conv2", "addon1", "addon2"):
        m = getattr(net, name)
        weights += [(f"{name}.weight", m.weight.detach().numpy()), (f"{name}.bias", m.bias.detach().numpy())]
    ntsr.write(OUT / "weights.ntsr", weights)
    ntsr.write(OUT / "bank.ntsr", [("protos", net.protos.detach().numpy())])
    sidecar = {"num_classes": 2, "class_of": class_of.tolist(), "provenance": [None] * len(class_of)}
    (OUT / "bank.ntsr.json").write_text(json.dumps(sidecar, indent=1) + "\n")
    ntsr.write(OUT / "images.ntsr", images)
    (OUT / "labels.json").write_text(json.dumps({iid: lab for (iid, _), lab in zip(images, labels)}, indent=1) + "\n")
    (OUT / "annotations.json").write_text(json.dumps(ann, indent=1) + "\n")
    with torch.no_grad():
        z = net.embed(x)
    ntsr.write(OUT / "embeddings.ntsr", [(iid, z[i].numpy()) for i, (iid, _) in enumerate(images)])


if __name__ == "__main__":
    main()
