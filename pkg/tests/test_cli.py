import json
import os
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor

import pytest

from supercon_extract.aggregator import read_records
from supercon_extract.cli import main
from supercon_extract.server import make_server

HERE = os.path.dirname(__file__)
CORPUS = os.path.join(HERE, "fixtures", "corpus")
MARKS = os.path.join(HERE, "fixtures", "subsection_marks.csv")
STAMP = "2024-01-01T00:00:00Z"
MGB2 = "We tested two materials MgB2 (Tc = 39 K) and FeSe (Tc = 16 K)."


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def pairs(result):
    return [(r["raw_material"], r["critical_temperature"]) for r in result["records"]]


def test_extract_text(capsys, tmp_path):
    source = tmp_path / "in.txt"
    source.write_text(MGB2, encoding="utf-8")
    records = tmp_path / "records.csv"
    code, out, _ = run(capsys, "extract", source, "--timestamp", STAMP, "--records", records)
    assert code == 0
    result = json.loads(out)
    assert pairs(result) == [("MgB2", "39 K"), ("FeSe", "16 K")]
    assert result["document"]["timestamp"] == STAMP
    assert [r.raw_material for r in read_records(str(records))] == ["MgB2", "FeSe"]


def test_extract_with_id_and_output_file(capsys, tmp_path):
    source = tmp_path / "in.txt"
    source.write_text(MGB2, encoding="utf-8")
    out_path = tmp_path / "out.json"
    code, out, _ = run(capsys, "extract", source, "--id", "paper-1", "-o", out_path)
    assert code == 0 and out == ""
    assert json.loads(out_path.read_text())["document"]["id"] == "paper-1"


def test_extract_gold_annotations(capsys, tmp_path):
    text = "Ba-122 shows Tc = 30 K."
    source = tmp_path / "in.txt"
    source.write_text(text, encoding="utf-8")
    gold = tmp_path / "gold.json"
    gold.write_text(json.dumps([
        {"sentence_index": 0, "start": 0, "end": 6, "label": "material"},
        {"sentence_index": 0, "start": 18, "end": 22, "label": "tcValue"},
    ]))
    code, out, _ = run(capsys, "extract", source, "--gold", gold, "--timestamp", STAMP)
    assert code == 0
    result = json.loads(out)
    assert [e["surface"] for e in result["document"]["sentences"][0]["entities"]] == ["Ba-122", "30 K"]
    assert pairs(result) == [("Ba-122", "30 K")]


def test_extract_gold_out_of_bounds(capsys, tmp_path):
    source = tmp_path / "in.txt"
    source.write_text("MgB2.", encoding="utf-8")
    gold = tmp_path / "gold.json"
    gold.write_text(json.dumps([{"sentence_index": 0, "start": 0, "end": 50, "label": "material"}]))
    code, _, err = run(capsys, "extract", source, "--gold", gold)
    assert code == 1 and "out of bounds" in err


def test_extract_empty_input(capsys, tmp_path):
    source = tmp_path / "empty.txt"
    source.write_text("", encoding="utf-8")
    code, out, _ = run(capsys, "extract", source)
    assert code == 0
    assert json.loads(out)["records"] == []


def test_extract_json_document(capsys):
    code, out, _ = run(capsys, "extract", os.path.join(CORPUS, "doc07.json"))
    assert code == 0
    result = json.loads(out)
    assert result["document"]["id"] == "doc07"
    assert sorted(pairs(result)) == [("Co-doped Ba-122", "24 K"), ("P-or Ba-122", "30 K")]


def test_extract_rejects_pdf(capsys, tmp_path):
    pdf = tmp_path / "paper.pdf"
    pdf.write_bytes(b"%PDF-1.7 binary")
    code, _, err = run(capsys, "extract", pdf)
    assert code == 1 and "PDF input is not supported" in err


def test_extract_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "extract", tmp_path / "nope.txt")
    assert code == 1 and "cannot read" in err


def test_config_errors_exit_2(capsys, tmp_path):
    source = tmp_path / "in.txt"
    source.write_text(MGB2, encoding="utf-8")
    code, _, err = run(capsys, "extract", source, "--config", tmp_path / "missing.json")
    assert code == 2 and "config" in err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"lexicon": "nowhere.tsv"}))
    assert run(capsys, "extract", source, "--config", bad)[0] == 2
    bad.write_text(json.dumps({"colour": "blue"}))
    code, _, err = run(capsys, "extract", source, "--config", bad)
    assert code == 2 and "unknown keys" in err


def test_config_with_custom_lexicon(capsys, tmp_path):
    (tmp_path / "lexicon.tsv").write_text("Ba-122\tmaterial\tcs\nshows Tc of\ttc\n", encoding="utf-8")
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"lexicon": "lexicon.tsv", "timestamp": STAMP}))
    source = tmp_path / "in.txt"
    source.write_text("Ba-122 shows Tc of 30 K.", encoding="utf-8")
    code, out, _ = run(capsys, "extract", source, "--config", config)
    assert code == 0
    result = json.loads(out)
    assert pairs(result) == [("Ba-122", "30 K")]
    assert result["document"]["timestamp"] == STAMP


def test_batch(capsys, tmp_path):
    db = tmp_path / "db.ndjson"
    export = tmp_path / "db.tsv"
    code, _, err = run(capsys, "batch", CORPUS, "-o", db, "--export", export, "--timestamp", STAMP, "--workers", 2)
    assert code == 0
    assert "10 documents: 10 ok, 0 failed" in err
    report = json.loads((tmp_path / "db.ndjson.report.json").read_text())
    assert report["totals"]["records"] == len(read_records(str(export)))


def test_batch_rejects_bad_workers(capsys, tmp_path):
    assert run(capsys, "batch", CORPUS, "-o", tmp_path / "db", "--workers", 0)[0] == 2


def test_batch_not_a_directory(capsys, tmp_path):
    assert run(capsys, "batch", tmp_path / "nope", "-o", tmp_path / "db")[0] == 1


def _gold_and_predicted(tmp_path):
    gold = os.path.join(CORPUS, "doc07.json")
    predicted = tmp_path / "pred.json"
    with open(gold, encoding="utf-8") as handle:
        doc = json.load(handle)
    doc["sentences"][0]["entities"] = doc["sentences"][0]["entities"][:2]
    predicted.write_text(json.dumps(doc))
    return gold, predicted


def test_eval_ner_with_figures(capsys, tmp_path):
    gold, predicted = _gold_and_predicted(tmp_path)
    figures = tmp_path / "figs"
    report_json = tmp_path / "ner.json"
    code, out, _ = run(capsys, "eval", "ner", "--gold", gold, "--predicted", predicted,
                       "--json", report_json, "--figures", figures)
    assert code == 0
    header, *rows = out.strip().split("\n")
    assert header.split("\t") == ["label", "precision", "recall", "f1", "support"]
    micro = json.loads(report_json.read_text())["micro"]
    assert micro["precision"] == 100.0 and micro["recall"] < 100.0
    assert (figures / "ner_scores.png").stat().st_size > 0


def test_eval_links(capsys, tmp_path):
    gold = os.path.join(CORPUS, "doc07.json")
    code, out, _ = run(capsys, "eval", "links", "--gold", gold, "--predicted", gold)
    assert code == 0


def test_eval_misaligned(capsys, tmp_path):
    gold, _ = _gold_and_predicted(tmp_path)
    other = os.path.join(CORPUS, "doc08.json")
    code, _, err = run(capsys, "eval", "ner", "--gold", gold, "--predicted", other)
    assert code == 1 and "doc08" in err


def test_eval_errors_with_figures(capsys, tmp_path):
    figures = tmp_path / "figs"
    code, out, _ = run(capsys, "eval", "errors", MARKS, "--figures", figures)
    assert code == 0
    assert "micro_all\t72.61\t847" in out
    assert (figures / "error_types.png").exists()
    assert (figures / "subsection_precision.png").exists()


def test_eval_errors_needs_marks(capsys):
    assert run(capsys, "eval", "errors")[0] == 1


def test_stats_with_figures(capsys, tmp_path):
    figures = tmp_path / "figs"
    holdout = os.path.join(CORPUS, "doc08.json")
    training = os.path.join(CORPUS, "doc07.json")
    code, out, _ = run(capsys, "stats", holdout, "--training", training, "--figures", figures)
    assert code == 0
    assert out.startswith("label\tentities\tunique\tvariability\tout_of_domain\n")
    assert (figures / "corpus_stats.png").exists()


# -- server --------------------------------------------------------------------

@pytest.fixture(scope="module")
def server():
    from supercon_extract.pipeline import PipelineConfig

    httpd = make_server("127.0.0.1", 0, PipelineConfig(timestamp=STAMP))
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{httpd.server_address[1]}"
    httpd.shutdown()
    httpd.server_close()


def request(url, body=None, content_type="text/plain"):
    req = urllib.request.Request(url, data=body, headers={"Content-Type": content_type} if body is not None else {})
    try:
        with urllib.request.urlopen(req, timeout=30) as response:
            return response.status, response.read()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read()


def test_health(server):
    status, body = request(server + "/health")
    assert status == 200 and json.loads(body) == {"status": "ok"}


def test_post_text_and_json(server):
    status, body = request(server + "/process", MGB2.encode())
    assert status == 200
    assert pairs(json.loads(body)) == [("MgB2", "39 K"), ("FeSe", "16 K")]
    status, body2 = request(server + "/process", json.dumps({"text": MGB2}).encode(), "application/json")
    assert status == 200 and body2 == body


@pytest.mark.parametrize("body,content_type", [
    (b"", "text/plain"), (b"   \n", "text/plain"), (b"{", "application/json"),
    (b'{"txt": "x"}', "application/json"), (b"\xff\xfe", "text/plain"),
])
def test_bad_requests(server, body, content_type):
    status, payload = request(server + "/process", body, content_type)
    assert status == 400 and "error" in json.loads(payload)


def test_unknown_path(server):
    assert request(server + "/nope")[0] == 404


def test_server_matches_extract(server, capsys, tmp_path):
    source = tmp_path / "in.txt"
    source.write_text(MGB2, encoding="utf-8")
    _, out, _ = run(capsys, "extract", source, "--timestamp", STAMP)
    _, body = request(server + "/process", MGB2.encode())
    assert body.decode("utf-8") == out


def test_concurrent_requests_agree(server):
    with ThreadPoolExecutor(8) as pool:
        bodies = list(pool.map(lambda _: request(server + "/process", MGB2.encode()), range(16)))
    assert {status for status, _ in bodies} == {200}
    assert len({body for _, body in bodies}) == 1
