"""Smoke test for the hashtag extension module."""

import os
import random
import sys
import tempfile
from fractions import Fraction

import hashtag


def main():
    code = hashtag.Code.builtin()
    assert (code.n, code.k, code.alpha) == (9, 6, 9)
    assert code.mds_witness() == [1, 2, 3, 5, 7, 8]

    rng = random.Random(1)
    data = [[rng.randrange(32) for _ in range(9)] for _ in range(6)]
    cols = code.encode(data)
    assert cols[:6] == data

    plan = code.plan(1, "msr")
    assert plan.bandwidth == 24 and len(plan.helpers) == 8
    full = {i + 1: c for i, c in enumerate(cols) if i != 0}
    assert plan.execute(full) == cols[0]

    lc = code.split(2, 2)
    assert lc.n == 10
    assert lc.roles[6:] == ["local", "local", "global", "global"]
    lcols = lc.encode(data)
    local = lc.plan(1, "local")
    assert local.helpers == [2, 3, 7] and local.bandwidth == 27
    assert local.execute({i + 1: c for i, c in enumerate(lcols)}) == lcols[0]
    assert lc.distance()[0] == 3

    cmp = lc.cost_compare(1, seek_cost=9, rate=1000, subpacket_bytes=10_000_000)
    assert cmp["winner"] == "local_plus_global"
    assert cmp["flip_seek_cost"] == Fraction(6000)

    b = hashtag.bounds(54, 9, 6, 8, 2, 2)
    assert b["msr"] == Fraction(24) and b["local_term"] == Fraction(27)
    assert hashtag.bounds(54, 9, 6, 8, 3, 2)["local_min"] == Fraction(18)

    mds = hashtag.Code.generate(9, 6, 9, w=5, poly=41, seed=7, max_tries=5000)
    assert mds.mds_witness() is None
    survivors = {i + 1: c for i, c in enumerate(mds.encode(data)) if i + 1 in (1, 2, 3, 5, 7, 8)}
    assert mds.decode(survivors) == data

    with tempfile.TemporaryDirectory() as tmp:
        src = os.path.join(tmp, "in.bin")
        payload = bytes(rng.randrange(256) for _ in range(54_000))
        with open(src, "wb") as f:
            f.write(payload)
        shards = os.path.join(tmp, "shards")
        hashtag.encode_file(src, shards, lc, 1000)
        os.remove(os.path.join(shards, "shard_01.bin"))
        stats = hashtag.repair(shards, 1, "auto", seek_cost=9, rate=1000)
        assert stats["strategy"] == "local_only" and stats["bytes_read"] == 27000
        out = os.path.join(tmp, "out.bin")
        hashtag.decode_dir(shards, out)
        with open(out, "rb") as f:
            assert f.read() == payload

        with open(os.path.join(shards, "shard_02.bin"), "r+b") as f:
            f.write(b"\xff")
        try:
            hashtag.decode_dir(shards, out)
        except hashtag.IntegrityError:
            pass
        else:
            raise AssertionError("corrupt shard not detected")

    try:
        lc.split(4, 2)
    except ValueError:
        pass
    else:
        raise AssertionError("bad locality accepted")

    print("smoke test ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
