import os

import numpy as np
import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")


@pytest.fixture(scope="session")
def tiny_vision_model(tmp_path_factory):
    """A runtime-built ViT checkpoint; stands in for a small public encoder
    because this environment has no model-hub access."""
    import torch
    from transformers import ViTConfig, ViTImageProcessor, ViTModel

    torch.manual_seed(0)
    path = tmp_path_factory.mktemp("models") / "tiny-vit"
    cfg = ViTConfig(hidden_size=32, num_hidden_layers=2, num_attention_heads=2,
                    intermediate_size=64, image_size=32, patch_size=16)
    ViTModel(cfg).save_pretrained(path)
    ViTImageProcessor(size={"height": 32, "width": 32}).save_pretrained(path)
    return str(path)


@pytest.fixture(scope="session")
def tiny_text_model(tmp_path_factory):
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    torch.manual_seed(1)
    path = tmp_path_factory.mktemp("models") / "tiny-bert"
    path.mkdir(parents=True)
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "a", "cat", "dog", "photo",
             "of", "the", "on", "mat", "runs", "sleeps"]
    (path / "vocab.txt").write_text("\n".join(vocab))
    cfg = BertConfig(hidden_size=32, num_hidden_layers=3, num_attention_heads=2,
                     intermediate_size=64, vocab_size=len(vocab),
                     max_position_embeddings=64)
    BertModel(cfg).save_pretrained(path)
    BertTokenizer(vocab_file=str(path / "vocab.txt")).save_pretrained(path)
    return str(path)


@pytest.fixture
def toy_manifest(tmp_path):
    """Two-item image+caption manifest with real (tiny) PNG files."""
    from PIL import Image

    rng = np.random.default_rng(7)
    rows = ["id,image_path,caption"]
    for i, caption in enumerate(["a photo of a cat", "the dog sleeps on the mat"]):
        img_path = tmp_path / f"img{i}.png"
        arr = rng.uniform(0, 255, size=(32, 32, 3)).astype(np.uint8)
        Image.fromarray(arr).save(img_path)
        rows.append(f"item{i},{img_path.name},{caption}")
    manifest = tmp_path / "manifest.csv"
    manifest.write_text("\n".join(rows) + "\n")
    return manifest
