#!/usr/bin/env python3
"""Regenerates the reference datasets under data/ in LIBSVM format.

Both come from scikit-learn's bundled copies of real datasets:
  breast_cancer_wdbc.svm  Breast Cancer Wisconsin Diagnostic, 569 x 30,
                          labels +1 (malignant) / -1 (benign).
  diabetes_binary.svm     Diabetes progression data, 442 x 10, binarized:
                          +1 if the progression target exceeds its median,
                          -1 otherwise.

Feature values are written unscaled at full precision; scaling is the
consumer's job.
"""

import os

from sklearn.datasets import load_breast_cancer, load_diabetes


def write_libsvm(path, X, y):
    with open(path, "w") as f:
        for row, label in zip(X, y):
            cells = [f"{int(label):+d}"]
            cells += [f"{j + 1}:{v:.17g}" for j, v in enumerate(row) if v != 0.0]
            f.write(" ".join(cells) + "\n")


def main():
    out_dir = os.path.join(os.path.dirname(__file__), "..", "data")
    os.makedirs(out_dir, exist_ok=True)

    bc = load_breast_cancer()
    # sklearn encodes malignant=0, benign=1; map to +1/-1.
    y = [1 if t == 0 else -1 for t in bc.target]
    write_libsvm(os.path.join(out_dir, "breast_cancer_wdbc.svm"), bc.data, y)

    db = load_diabetes()
    ordered = sorted(float(t) for t in db.target)
    n = len(ordered)
    med = (ordered[n // 2 - 1] + ordered[n // 2]) / 2 if n % 2 == 0 else ordered[n // 2]
    y = [1 if t > med else -1 for t in db.target]
    write_libsvm(os.path.join(out_dir, "diabetes_binary.svm"), db.data, y)

    print("wrote", out_dir)


if __name__ == "__main__":
    main()
