#!/usr/bin/env python3
# Copyright 2026 The geoham Authors.
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
"""Regenerates data/corpus.smi from combinatorial templates.

The shipped corpus is the output of this script; RDKit is only used to
reject chemically invalid concatenations and is not needed at build time.
"""

import argparse
import random

from rdkit import Chem, RDLogger

RDLogger.DisableLog("rdApp.*")

# Groups that may appear anywhere in a chain.
INNER = [
    "C", "CC", "CCC", "C(C)", "C(C)C", "O", "N", "N(C)", "C(=O)", "C(=O)N",
    "NC(=O)", "C(=O)O", "OC(=O)", "S", "S(=O)(=O)", "CO", "OC", "C=C", "C#C",
    "c1ccccc1", "c1ccncc1", "c1ccsc1", "c1ccoc1", "C1CCCCC1", "C1CCOCC1",
    "C1CCNCC1", "c1ccc2ccccc2c1", "C1CC1", "C(F)", "C(Cl)", "C(O)", "C(N)",
    "P(=O)(O)", "c1cc[nH]c1", "c1cnccn1", "CSC", "CCO", "OCCO",
]
# Groups that terminate a chain.
TERMINAL = [
    "C", "CC", "O", "N", "F", "Cl", "Br", "I", "C#N", "C=O", "C(=O)O",
    "C(=O)N", "C(F)(F)F", "OC", "NC", "N(C)C", "S", "SC", "P(=O)(O)O",
    "OP(=O)(O)O", "S(=O)(=O)N", "S(=O)(=O)C", "c1ccccc1", "c1ccncc1",
    "c1ccsc1", "C1CCCC1", "C(C)(C)C", "C=C", "C#C", "B(O)O",
]


def heavy_atoms(mol):
    return mol.GetNumHeavyAtoms()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=20260101)
    ap.add_argument("--count", type=int, default=2000)
    ap.add_argument("--out", default="data/corpus.smi")
    args = ap.parse_args()

    rng = random.Random(args.seed)
    seen = set()
    corpus = []
    n_sp = 0
    attempts = 0
    while len(corpus) < args.count and attempts < 200000:
        attempts += 1
        parts = [rng.choice(TERMINAL)]
        for _ in range(rng.choice([0, 1, 1, 2, 2, 3, 4])):
            parts.append(rng.choice(INNER))
        parts.append(rng.choice(TERMINAL))
        smi = "".join(parts)
        mol = Chem.MolFromSmiles(smi)
        if mol is None:
            continue
        n = heavy_atoms(mol)
        if n < 3 or n > 30:
            continue
        if smi in seen:
            continue
        has_sp = any(a.GetSymbol() in ("S", "P") for a in mol.GetAtoms())
        # Keep the S/P share near a quarter so element splits stay balanced.
        if has_sp and n_sp >= args.count // 4:
            continue
        seen.add(smi)
        corpus.append(smi)
        n_sp += has_sp
    with open(args.out, "w") as f:
        for smi in corpus:
            f.write(smi + "\n")
    print(f"wrote {len(corpus)} smiles ({n_sp} with S/P) to {args.out}")


if __name__ == "__main__":
    main()
