"""Tabulate the persistence condition against the Ito/Stratonovich verdicts
for every scalar field in the corpus."""

from sdesym.convert import persistence_condition, to_stratonovich
from sdesym.deteq import check_symmetry
from sdesym.expr import is_zero, render, simplify
from sdesym.model import load_model_file
from sdesym.runner import CORPUS_DIR


def main():
    print(f"{'model':8} {'field':6} {'ito':13} {'stratonovich':13} {'vanishes':8}  condition")
    for path in sorted(CORPUS_DIR.glob("*.sde")):
        m = load_model_file(path)
        s = m.system
        if s.n != 1 or s.m != 1:
            continue
        for name, X in m.fields.items():
            cond = simplify(persistence_condition(s, X))
            van = bool(is_zero(cond, None, s.symbols))
            ito = check_symmetry(s, X).verdict
            strat = check_symmetry(to_stratonovich(s), X).verdict
            print(f"{path.stem:8} {name:6} {ito:13} {strat:13} {str(van):8}  {render(cond)}")


if __name__ == "__main__":
    main()
