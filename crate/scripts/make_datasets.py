"""Writes the small categorical benchmark datasets into crates/core/data.

Synthetic ones (tic-tac-toe endgames, balance scale, MONK-1, MONK-3) are
enumerated exactly. Iris, wine and breast cancer come from the copies shipped
with scikit-learn and are cut into quantile bins.
"""

import itertools
from pathlib import Path

import pandas as pd
from sklearn import datasets

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "data"
BINS = 3


def tic_tac_toe():
    lines = [(0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8), (0, 4, 8), (2, 4, 6)]

    def winner(b):
        for a, c, d in lines:
            if b[a] != "b" and b[a] == b[c] == b[d]:
                return b[a]
        return None

    seen = set()
    rows = []

    def play(board, turn):
        w = winner(board)
        if w or "b" not in board:
            key = tuple(board)
            if key not in seen:
                seen.add(key)
                rows.append(list(board) + ["positive" if w == "x" else "negative"])
            return
        for i in range(9):
            if board[i] == "b":
                board[i] = turn
                play(board, "o" if turn == "x" else "x")
                board[i] = "b"

    play(["b"] * 9, "x")
    cols = ["top_left", "top_middle", "top_right", "middle_left", "middle_middle",
            "middle_right", "bottom_left", "bottom_middle", "bottom_right", "class"]
    return pd.DataFrame(rows, columns=cols)


def balance_scale():
    rows = []
    for lw, ld, rw, rd in itertools.product(range(1, 6), repeat=4):
        left, right = lw * ld, rw * rd
        cls = "L" if left > right else "R" if right > left else "B"
        rows.append([f"w{lw}", f"d{ld}", f"w{rw}", f"d{rd}", cls])
    return pd.DataFrame(rows, columns=["left_weight", "left_distance", "right_weight", "right_distance", "class"])


def monk(rule):
    rows = []
    for a in itertools.product(range(1, 4), range(1, 4), range(1, 3), range(1, 4), range(1, 5), range(1, 3)):
        rows.append([f"{k}{v}" for k, v in zip("abcdef", a)] + [str(int(rule(*a)))])
    return pd.DataFrame(rows, columns=["a1", "a2", "a3", "a4", "a5", "a6", "class"])


def binned(bunch):
    names = [c.replace(" (cm)", "").replace(" ", "_").replace("/", "_") for c in bunch.feature_names]
    df = pd.DataFrame(bunch.data, columns=names)
    for c in df.columns:
        df[c] = [f"q{k + 1}" for k in pd.qcut(df[c], BINS, labels=False, duplicates="drop")]
    df["class"] = [str(bunch.target_names[t]) for t in bunch.target]
    return df


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    out = {
        "tic_tac_toe": tic_tac_toe(),
        "balance_scale": balance_scale(),
        "monk1": monk(lambda a1, a2, a3, a4, a5, a6: a1 == a2 or a5 == 1),
        "monk3": monk(lambda a1, a2, a3, a4, a5, a6: (a5 == 3 and a4 == 1) or (a5 != 4 and a2 != 3)),
        "iris": binned(datasets.load_iris()),
        "wine": binned(datasets.load_wine()),
        "breast_cancer": binned(datasets.load_breast_cancer()),
    }
    for name, df in out.items():
        df.to_csv(OUT / f"{name}.csv", index=False)
        print(f"{name}: {len(df)} rows, {df.shape[1] - 1} attributes, {df['class'].nunique()} classes")


if __name__ == "__main__":
    main()
