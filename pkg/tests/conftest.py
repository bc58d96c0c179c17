import numpy as np
import pytest

from xsim import DatasetManifest, TokenEmbeddingSet, save_manifest, write_token_embeddings


def random_embset(rng, num_sentences, hidden_dim, token_range=(1, 6),
                  language="en", layer=0):
    lengths = rng.integers(token_range[0], token_range[1] + 1, size=num_sentences)
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    data = rng.normal(size=(offsets[-1], hidden_dim)).astype(np.float32)
    return TokenEmbeddingSet(language=language, layer=layer,
                             offsets=offsets, data=data)


def build_dataset(root, languages, num_layers, num_sentences, hidden_dim,
                  make_set, model_name="synthetic"):
    """Write a full XEMB dataset; make_set(lang, layer) -> TokenEmbeddingSet."""
    file_index = {}
    for lang in languages:
        file_index[lang] = {}
        for layer in range(num_layers):
            emb = make_set(lang, layer)
            name = f"{lang}.{layer}.xemb"
            write_token_embeddings(emb, root / name)
            file_index[lang][str(layer)] = name
    manifest = DatasetManifest(
        dataset_id="test", languages=list(languages), num_layers=num_layers,
        hidden_dim=hidden_dim, num_sentences=num_sentences,
        model_name=model_name, file_index=file_index)
    save_manifest(manifest, root)
    return manifest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    # one PASS/FAIL line per acceptance criterion, whenever the gate ran
    lines = []
    for status in ("passed", "failed"):
        for rep in terminalreporter.stats.get(status, []):
            if getattr(rep, "when", None) == "call" and "test_acceptance" in rep.nodeid:
                name = rep.nodeid.split("::")[-1]
                lines.append(f"{'PASS' if status == 'passed' else 'FAIL'}: {name}")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: s.split(": ")[1]):
            terminalreporter.write_line(line)
