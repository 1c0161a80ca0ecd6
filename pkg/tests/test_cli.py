"""Tests for the command-line surface."""

import json

import pytest

from src.cli import (
    EXIT_CERTIFICATE_FAILED,
    EXIT_OK,
    EXIT_RESOURCE,
    EXIT_SCHEMA,
    build_registry,
    run,
)
from src.config import get_config
from src.core import shortest_path_metric
from src.embeddings import frechet_embedding
from src.generators import diamond
from src.serialization import dumps, embedding_to_model, sequence_to_model
from src.types import PointSequence


def output(capsys):
    return json.loads(capsys.readouterr().out)


def write_generated(tmp_path, level):
    """Graph document of D_level written to disk."""
    path = tmp_path / f"d{level}.json"
    assert run(["--out", str(path), "generate", "diamond", "--level", str(level)]) == EXIT_OK
    path.write_text(dumps(json.loads(path.read_text())["result"]), encoding="utf-8")
    return path


class TestRegistry:
    """Test command registration."""

    def test_two_word_commands(self):
        """Test grouped commands parse to their full name."""
        parser = build_registry().build_parser()
        args = parser.parse_args(["certify", "thick", "--family", "diamond"])
        assert args.command_name == "certify thick"

    def test_unknown_command(self):
        """Test unknown commands exit with a usage error."""
        assert run(["frobnicate"]) == EXIT_SCHEMA


class TestGenerate:
    """Test graph generation."""

    def test_diamond(self, capsys):
        """Test D_2 has 12 vertices and 16 edges."""
        assert run(["generate", "diamond", "--level", "2"]) == EXIT_OK
        document = output(capsys)
        assert document["command"] == "generate diamond"
        assert document["seed"] == 0
        assert len(document["result"]["vertices"]) == 12
        assert len(document["result"]["edges"]) == 16

    def test_no_root_pair(self, capsys):
        """Test the root pair can be left out."""
        assert run(["generate", "diamond", "--level", "1", "--no-root-pair"]) == EXIT_OK
        assert len(output(capsys)["result"]["active_pairs"]) == 6

    def test_laakso(self, capsys):
        """Test X_1 has 6 vertices and 6 edges."""
        assert run(["generate", "laakso2", "--level", "1"]) == EXIT_OK
        result = output(capsys)["result"]
        assert len(result["vertices"]) == 6
        assert len(result["edges"]) == 6

    def test_cap(self):
        """Test levels above the vertex cap exit with the resource code."""
        assert run(["--cap", "10", "generate", "diamond", "--level", "3"]) == EXIT_RESOURCE

    def test_overrides_are_restored(self):
        """Test global flags only apply to their run."""
        run(["--seed", "7", "generate", "diamond", "--level", "0"])
        assert get_config().run.seed == 0


class TestGeodesics:
    """Test geodesic enumeration and partitions."""

    def test_from_graph_file(self, tmp_path, capsys):
        """Test a generated graph file feeds the geodesics command."""
        path = write_generated(tmp_path, 2)
        capsys.readouterr()
        assert run(["geodesics", "--graph", str(path)]) == EXIT_OK
        assert output(capsys)["result"]["count"] == 8

    def test_empty_graph_file(self, tmp_path):
        """Test empty input exits with the schema code."""
        path = tmp_path / "empty.json"
        path.write_text("", encoding="utf-8")
        assert run(["geodesics", "--graph", str(path)]) == EXIT_SCHEMA

    def test_partition_with_extension(self, tmp_path, capsys):
        """Test a geodesic extension has B-ratio 1."""
        d = diamond(2)
        first = tmp_path / "first.json"
        second = tmp_path / "second.json"
        first.write_text(dumps(sequence_to_model(PointSequence(("u", "a", "v")))), encoding="utf-8")
        second.write_text(
            dumps(sequence_to_model(PointSequence(("u", "a0", "a", "a1", "v")))), encoding="utf-8"
        )
        code = run(
            [
                "partition",
                "--family",
                "diamond",
                "--level",
                str(d.level),
                "--geodesic",
                str(first),
                "--extension",
                str(second),
                "--max-ratio",
                "1",
            ]
        )
        assert code == EXIT_OK
        result = output(capsys)["result"]
        assert result["b_ratio"] == {"num": 1, "den": 1}
        assert result["partition"] == [{"num": 0, "den": 1}, {"num": 1, "den": 2}, {"num": 1, "den": 1}]


class TestCertify:
    """Test witness certification."""

    def test_diamond_thick(self, capsys):
        """Test the built diamond witness passes."""
        assert run(["certify", "thick", "--family", "diamond", "--level", "2"]) == EXIT_OK
        document = output(capsys)
        assert document["certificates"]["passed"] is True
        assert document["result"]["witness"]["z"] == ["a0", "a1"]

    def test_width_constant_too_large(self):
        """Test certifying C = 2 fails the width clause."""
        assert run(["certify", "thick", "--family", "diamond", "--level", "2", "--c", "2"]) == (
            EXIT_CERTIFICATE_FAILED
        )

    def test_iso(self):
        """Test the iso form of the diamond witness passes."""
        assert run(["certify", "iso", "--family", "diamond", "--level", "2"]) == EXIT_OK


class TestEmbeddings:
    """Test embedding and distortion commands."""

    def test_stegall(self, capsys):
        """Test the dyadic system embeds D_2 and reports its constants."""
        assert run(["embed", "stegall", "--depth", "2"]) == EXIT_OK
        result = output(capsys)["result"]
        assert result["norm"] == "l1"
        assert len(result["points"]) == 12
        assert result["certified"]["upper"] == {"num": 1, "den": 1}

    def test_distortion_of_frechet(self, tmp_path, capsys):
        """Test a stored embedding is measured against its certificate."""
        metric = shortest_path_metric(diamond(1).graph)
        path = tmp_path / "embedding.json"
        path.write_text(dumps(embedding_to_model(frechet_embedding(metric, metric.points))), encoding="utf-8")
        code = run(["distortion", "--family", "diamond", "--level", "1", "--embedding", str(path)])
        assert code == EXIT_OK
        assert output(capsys)["result"]["distortion"] == {"num": 1, "den": 1}

    def test_martingale_csv(self, tmp_path, capsys):
        """Test traces can be written as CSV."""
        metric = shortest_path_metric(diamond(2).graph)
        path = tmp_path / "embedding.json"
        path.write_text(dumps(embedding_to_model(frechet_embedding(metric, metric.points))), encoding="utf-8")
        code = run(
            [
                "--format",
                "csv",
                "martingale",
                "extract",
                "--embedding",
                str(path),
                "--oracle",
                "diamond",
                "--steps",
                "2",
                "--max-level",
                "2",
            ]
        )
        assert code == EXIT_OK
        assert capsys.readouterr().out.startswith("step,interval_start_num")

    def test_martingale_with_space(self, tmp_path, capsys):
        """Test the space document sets the oracle depth."""
        space = write_generated(tmp_path, 2)
        metric = shortest_path_metric(diamond(2).graph)
        path = tmp_path / "embedding.json"
        path.write_text(
            dumps(embedding_to_model(frechet_embedding(metric, metric.points), space="diamond:2")), encoding="utf-8"
        )
        capsys.readouterr()
        code = run(
            ["martingale", "extract", "--embedding", str(path), "--space", str(space), "--oracle", "diamond", "--steps", "2"]
        )
        assert code == EXIT_OK
        assert [step["index"] for step in output(capsys)["result"]["steps"]] == [0, 1, 2]

    def test_martingale_space_family_mismatch(self, tmp_path):
        """Test a space from another family is refused."""
        space = write_generated(tmp_path, 2)
        metric = shortest_path_metric(diamond(2).graph)
        path = tmp_path / "embedding.json"
        path.write_text(dumps(embedding_to_model(frechet_embedding(metric, metric.points))), encoding="utf-8")
        code = run(
            ["martingale", "extract", "--embedding", str(path), "--space", str(space), "--oracle", "laakso2", "--steps", "1"]
        )
        assert code == EXIT_SCHEMA

    def test_martingale_embedding_space_mismatch(self, tmp_path):
        """Test an embedding recorded on diamonds cannot feed the Laakso oracle."""
        metric = shortest_path_metric(diamond(1).graph)
        path = tmp_path / "embedding.json"
        path.write_text(
            dumps(embedding_to_model(frechet_embedding(metric, metric.points), space="diamond:1")), encoding="utf-8"
        )
        assert run(["martingale", "extract", "--embedding", str(path), "--oracle", "laakso2", "--steps", "1"]) == (
            EXIT_SCHEMA
        )

    def test_csv_needs_trace(self):
        """Test CSV output is refused for commands without a trace."""
        assert run(["--format", "csv", "generate", "diamond", "--level", "1"]) == EXIT_SCHEMA


class TestReflexivity:
    """Test the reflexivity command."""

    def test_prefix_witness(self, capsys):
        """Test the prefix witness passes the forward check."""
        code = run(
            ["reflexivity", "check", "--prefix", "4", "--delta", "2", "--samples", "50", "--basic-constant", "2"]
        )
        assert code == EXIT_OK
        assert output(capsys)["result"]["pairs_checked"] == 50

    @pytest.mark.parametrize("prefix", ["0", "-1"])
    def test_invalid_dimension(self, prefix):
        """Test non-positive dimensions are rejected."""
        assert run(["reflexivity", "check", "--prefix", prefix]) != EXIT_OK


class TestPackage:
    """Test package metadata."""

    def test_metadata(self):
        """Test the package exposes its version without placeholder contacts."""
        import src

        assert src.__version__ == "0.1.0"
        assert not hasattr(src, "__author__")
        assert not hasattr(src, "__email__")
