"""
Determinism check: one experiment at several thread counts, CSV bytes compared.
Example: PYTHONPATH=. python scripts/determinism.py --game chsh --n 1000 --trials 200 --threads 1,2,8
"""
import argparse, hashlib, time

from nonsig.ns_analysis import load_game_like
from nonsig.repetition import build_repeated_strategy, csv_text, simulate


def digest(game, strategy, n, trials, seed, threads):
    t0 = time.time()
    text = csv_text(simulate(game, strategy, n, trials, seed, threads=threads))
    return hashlib.sha256(text.encode()).hexdigest(), (time.time() - t0) * 1000


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--game", default="chsh")
    ap.add_argument("--strategy", default="iid-optimal")
    ap.add_argument("--permute", action="store_true")
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--threads", default="1,2,4,8")
    args = ap.parse_args()

    game = load_game_like(args.game)
    strategy = build_repeated_strategy(args.strategy, game, permute=args.permute)
    seen = set()
    for t in [int(x) for x in args.threads.split(",") if x.strip()]:
        h, ms = digest(game, strategy, args.n, args.trials, args.seed, t)
        seen.add(h)
        print(f"threads={t:<3} sha256={h[:16]}  {ms:.0f}ms")
    if len(seen) != 1:
        print("MISMATCH: CSV output depends on the thread count")
        return 1
    print("identical")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
