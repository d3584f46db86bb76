"""Column-group structure of each code and the move schedules it implies."""

from itertools import groupby

from apmqec.aod import compile_generic, default_layout, generic_move_bound, transition_schedule
from apmqec.apm import Apm
from apmqec.codes import load_fixture
from apmqec.search import DEFAULT_ORDERING, column_structure


def describe(run):
    kind = run[0].kind
    if "Shift" in kind:
        return ", ".join(f"{kind}({st.amount})" for st in run)
    return kind if len(run) == 1 else f"{len(run)} x {kind}"


def main():
    for P in (96, 192, 384):
        spec = load_fixture(P)
        info = column_structure(spec)
        layout = default_layout(spec)
        print(f"P={P}: column group order {info['group_order']}, maximal abelian "
              f"{info['invariant_factors']}, {len(info['inside'])}/12 inside, "
              f"layout {layout.rows}x{layout.cols} ({layout.provenance})")
        for s in transition_schedule(spec, DEFAULT_ORDERING, layout)[:4]:
            steps = ", ".join(describe(list(g)) for _, g in groupby(s.steps, key=lambda st: st.kind))
            print(f"  {s.label:8s} [{s.strategy}] {steps or 'no motion'}")

    # the generic fallback on a row-major grid
    f = Apm(13, 30, 96)
    sched = compile_generic(f, 8, 12)
    print(f"generic {f} on 12x8: {sched.moves} moves (bound {generic_move_bound(8, 12)})")


if __name__ == "__main__":
    main()
