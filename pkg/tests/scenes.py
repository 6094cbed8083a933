"""Hand-constructed training configurations where specific rules disagree."""

import numpy as np

from ldknn.data import Dataset


def dense_vs_majority_scene():
    """4 near, tightly grouped class-1 points vs 6 remote class-2 points.

    All coordinates give exact squared distances (0.25 and 25), so the
    neighborhood of the origin with k=10 is the whole training set.
    Majority voting picks class 2; the neighborhood is far denser in
    class 1 around the query.
    """
    pts = [
        (0.5, 0.0), (-0.5, 0.0), (0.0, 0.5), (0.0, -0.5),          # class 1
        (5.0, 0.0), (0.0, 5.0), (-5.0, 0.0), (0.0, -5.0),          # class 2
        (3.0, 4.0), (-3.0, -4.0),
    ]
    labels = ["1"] * 4 + ["2"] * 6
    return Dataset.from_arrays(np.array(pts), labels), np.zeros(2)


def spread_vs_centroid_scene():
    """Class 2's centroid sits exactly on the query; class 1 is denser there.

    Class-1 points enclose the origin at radius ~1 with centroid (0, 0.2);
    class-2 points lie at radius 2.5-3 with centroid exactly (0, 0), so a
    nearest-centroid rule picks class 2.
    """
    pts = [
        (1.0, 0.2), (-1.0, 0.2), (0.0, 1.2), (0.0, -0.8), (0.0, 0.2),   # class 1
        (2.0, 1.5), (-2.0, 1.5), (0.0, -3.0), (2.5, 0.0), (-2.5, 0.0),  # class 2
    ]
    labels = ["1"] * 5 + ["2"] * 5
    return Dataset.from_arrays(np.array(pts), labels), np.zeros(2)
