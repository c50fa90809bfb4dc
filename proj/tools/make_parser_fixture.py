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
"""Freezes RDKit parse results for the SMILES parser regression fixture.

Output columns: smiles, atoms, bonds, ring_bonds, total_h.
"""

from rdkit import Chem, RDLogger

RDLogger.DisableLog("rdApp.*")

EXTRA = [
    "C", "CCO", "C1CC1", "c1ccccc1", "[H][H]", "O", "C[C@@H](O)N", "F/C=C/F",
    "F/C=C\\Cl", "[NH4+]", "C[N+](C)(C)C", "[O-]C(=O)C", "c1cc[nH]c1",
    "C%10CCCCC%10", "C-C-C", "c1ccc2ccccc2c1", "O=C=O", "N#N", "C1CC2CCC1CC2",
    "CS(=O)(=O)N", "OP(=O)(O)O", "Brc1ccc(I)cc1", "C(Cl)(Cl)Cl", "[13CH4]",
    "[2H]C", "c1ccoc1", "c1ccsc1", "C1=CC=CC=C1", "CC(C)(C)C#N", "B(O)(O)C",
]


def main():
    corpus = [l.strip() for l in open("data/corpus.smi") if l.strip()]
    picks = EXTRA + corpus[::19][: 100 - len(EXTRA)]
    params = Chem.SmilesParserParams()
    params.removeHs = False
    with open("tests/data/parser_reference.tsv", "w") as f:
        f.write("smiles\tatoms\tbonds\tring_bonds\ttotal_h\n")
        for smi in picks:
            mol = Chem.MolFromSmiles(smi, params)
            assert mol is not None, smi
            ring = sum(1 for b in mol.GetBonds() if b.IsInRing())
            h = sum(a.GetTotalNumHs() for a in mol.GetAtoms())
            f.write(f"{smi}\t{mol.GetNumAtoms()}\t{mol.GetNumBonds()}\t{ring}\t{h}\n")
    print(len(picks))


if __name__ == "__main__":
    main()
