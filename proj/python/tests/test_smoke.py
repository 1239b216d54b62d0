# python/tests/test_smoke.py

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
# WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
# MERCHANTABLITY OR NON-INFRINGEMENT.
# See the Apache 2 License for the specific language governing permissions and
# limitations under the License.

import math

import numpy as np
import pytest

import alignkit


def test_version():
    assert alignkit.__version__.count(".") == 2


def test_metrics():
    m = alignkit.evaluate(2, 2, hyp=[(0, 0), (0, 1)], sure=[(0, 0), (1, 1)])
    assert m["precision"] == 0.5
    assert m["recall"] == 0.5
    assert m["aer"] == 0.5
    assert alignkit.evaluate(1, 1, hyp=[], sure=[(0, 0)])["precision"] == 1.0
    with pytest.raises(alignkit.UndefinedMetric):
        alignkit.evaluate(1, 1, hyp=[], sure=[])
    with pytest.raises(alignkit.MalformedInput):
        alignkit.evaluate(1, 1, hyp=[(3, 0)], sure=[(0, 0)])
    assert issubclass(alignkit.MalformedInput, alignkit.Error)


def test_pharaoh():
    sure, possible = alignkit.parse_pharaoh("0-0 1?2")
    assert sure == [(0, 0)]
    assert possible == [(1, 2)]
    assert alignkit.emit_pharaoh(2, 2, [(1, 1), (0, 0)]) == "0-0 1-1"


def test_extract():
    m = np.array([[0.9, 0.1], [0.2, 0.8]])
    assert alignkit.extract(m, space="probability") == [(0, 0), (1, 1)]
    assert alignkit.extract(m, ["a2:0.5", "a1"], space="probability") == [(0, 0), (1, 1)]
    assert alignkit.extract(np.array([[4.0, 2.0, 1.0]]), ["a3:0.5"], "logit-diff") == [(0, 0), (0, 1)]
    with pytest.raises(alignkit.ConfigError):
        alignkit.extract(m, ["a3:0"])


def test_ibm_round_trip(tmp_path):
    corpus = alignkit.synthetic_corpus(pairs=200, seed=3)
    src = [c[0] for c in corpus]
    tgt = [c[1] for c in corpus]
    model, ll = alignkit.train_ibm(src, tgt, iterations=5)
    assert len(ll) == 5
    assert all(b >= a for a, b in zip(ll, ll[1:]))
    hits = sum(sorted(model.viterbi(s, t)) == sorted(g) for s, t, g in corpus)
    assert hits == len(corpus)

    scores = model.m1_scores(src[0], tgt[0])
    assert scores.shape == (len(src[0]), len(tgt[0]))
    s0, t0 = src[0][0], tgt[0][0]
    mixed = (model.prob(s0, t0) + model.prob("<null>", t0)) / 2
    assert math.isclose(scores[0, 0], math.log(mixed))
    post = model.posterior(src[0], tgt[0])
    assert np.all(post >= 0) and np.all(post <= 1)

    path = str(tmp_path / "m.ibm")
    model.save(path)
    again = alignkit.LexiconModel.load(path)
    assert again.prob(src[0][0], tgt[0][0]) == model.prob(src[0][0], tgt[0][0])


def test_cli_in_process(tmp_path):
    code, out, _ = alignkit.run_cli(["--version"])
    assert code == 0 and out.startswith("alignkit")
    g = tmp_path / "g"
    g.write_text("0-0 1-1\n")
    code, out, _ = alignkit.run_cli(["eval", "--hyp", str(g), "--gold", str(g)])
    assert (code, out) == (0, "1.0000 1.0000 0.0000\n")
    code, _, err = alignkit.run_cli(["eval", "--hyp", str(tmp_path / "missing"), "--gold", str(g)])
    assert code == 2 and "error" in err
