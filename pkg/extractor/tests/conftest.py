import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizerFast

VOCAB = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
         "a", "b", "c", "hello", "world", "tere", "maailm", "kass", "koer"]


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    """Randomly initialized 2-layer BERT small enough to run in tests."""
    root = tmp_path_factory.mktemp("tiny-bert")
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n")
    # the direct vocab_file constructor drops everything but the special
    # tokens under transformers 5.x; from_pretrained reads the word list
    tokenizer = BertTokenizerFast.from_pretrained(str(root), do_lower_case=True)
    assert len(tokenizer) == len(VOCAB)
    assert tokenizer.tokenize("hello world") == ["hello", "world"]
    torch.manual_seed(0)
    config = BertConfig(vocab_size=len(VOCAB), hidden_size=16,
                        num_hidden_layers=2, num_attention_heads=2,
                        intermediate_size=32, max_position_embeddings=32)
    model = BertModel(config)
    model.save_pretrained(root)
    tokenizer.save_pretrained(root)
    return model, tokenizer, root


@pytest.fixture
def corpus():
    return {
        "en": ["hello world", "a b c hello", "world a", "c b a"],
        "et": ["tere maailm", "kass koer tere", "maailm kass", "koer kass tere"],
    }
