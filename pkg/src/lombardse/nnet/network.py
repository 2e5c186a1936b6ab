"""Mask-estimation networks: VO / AO / AV encoder-decoder wiring.

The audio encoder treats a standardized 321x20 magnitude segment as a
1-channel image (frequency padded to 384 so six stride-2 halvings stay
integral); the video encoder consumes 5 grayscale frames as channels. Encoder
outputs are flattened, concatenated, passed through 3 fully connected layers,
and reshaped to seed a decoder of 6 transposed convolutions that exactly
mirrors the audio encoder; encoder activations 1/3/5 are concatenated into
the mirrored decoder inputs. Output layer is ReLU, cropped back to 321 bins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..seeding import rng_for
from .layers import (
    BatchNorm,
    Chain,
    Conv2d,
    ConvTranspose2d,
    Dense,
    Dropout,
    LeakyReLU,
    MaxPool2d,
    ReLU,
    conv_output_size,
)

N_BINS = 321
PADDED_BINS = 384  # next multiple of 2^6 above 321
SEGMENT_FRAMES = 20
VIDEO_FRAMES = 5

FULL_CHANNELS = (64, 128, 256, 256, 256, 256)
DESK_CHANNELS = (8, 16, 32, 32, 32, 32)


def plan_axis(size: int, n_layers: int = 6) -> list[dict]:
    """Per-layer (in, out, pad, out_pad) so a stride-2/kernel-4 conv stack
    halves the axis (ceil) and the mirrored transposed stack inverts it.

    Even sizes take pad 1, odd sizes pad 2; the matching output padding is
    then 0 or 1 respectively, always a legal value for stride 2.
    """
    plan = []
    for _ in range(n_layers):
        pad = 1 if size % 2 == 0 else 2
        out = conv_output_size(size, 4, 2, pad)
        assert out == -(-size // 2)
        plan.append({"in": size, "out": out, "pad": pad,
                     "out_pad": size - 2 * out + 2 * pad - 2})
        size = out
    return plan


@dataclass(frozen=True)
class ArchitectureConfig:
    modality: str = "av"
    audio_channels: tuple[int, ...] = FULL_CHANNELS
    video_channels: tuple[int, ...] = FULL_CHANNELS
    video_size: int = 128
    fusion_widths: tuple[int, ...] | None = None
    dropout_rate: float = 0.25
    leaky_slope: float = 0.2
    bn_momentum: float = 0.1

    def __post_init__(self):
        if self.modality not in ("vo", "ao", "av"):
            raise ValueError(f"unknown modality {self.modality!r}")
        if len(self.audio_channels) != 6 or len(self.video_channels) != 6:
            raise ValueError("encoder/decoder channel plans must have 6 entries")
        if self.video_size < 16:
            raise ValueError("video crops below 16x16 are not supported")
        if self.fusion_widths is not None and len(self.fusion_widths) != 3:
            raise ValueError("fusion takes exactly 3 layer widths")

    @classmethod
    def desk_scale(cls, modality: str = "av") -> "ArchitectureConfig":
        return cls(modality=modality, audio_channels=DESK_CHANNELS,
                   video_channels=DESK_CHANNELS, video_size=32)

    @property
    def uses_audio(self) -> bool:
        return self.modality in ("ao", "av")

    @property
    def uses_video(self) -> bool:
        return self.modality in ("vo", "av")

    def seed_shape(self) -> tuple[int, int, int]:
        freq = plan_axis(PADDED_BINS)[-1]["out"]
        time = plan_axis(SEGMENT_FRAMES)[-1]["out"]
        return (self.audio_channels[-1], freq, time)


class MaskNet:
    """The estimator graph plus hand-wired forward/backward passes."""

    def __init__(self, cfg: ArchitectureConfig, seed: int = 0):
        self.cfg = cfg
        self.seed = seed
        self._step = 0
        freq_plan = plan_axis(PADDED_BINS)
        time_plan = plan_axis(SEGMENT_FRAMES)
        self.freq_plan, self.time_plan = freq_plan, time_plan
        salt = iter(range(1000))

        def rng():
            return rng_for(seed, next(salt))

        act = lambda: LeakyReLU(cfg.leaky_slope)

        self.audio_blocks: list[Chain] = []
        if cfg.uses_audio:
            cin = 1
            for i, cout in enumerate(cfg.audio_channels):
                conv = Conv2d(cin, cout, kernel=4, stride=2,
                              pad=(freq_plan[i]["pad"], time_plan[i]["pad"]),
                              rng=rng())
                self.audio_blocks.append(
                    Chain(conv, act(), BatchNorm(cout, cfg.bn_momentum)))
                cin = cout

        self.video_blocks: list[Chain] = []
        self.pool = MaxPool2d()
        self.dropout = Dropout(cfg.dropout_rate)
        if cfg.uses_video:
            size = cfg.video_size
            cin = VIDEO_FRAMES
            for i, cout in enumerate(cfg.video_channels):
                pad = 1 if size % 2 == 0 else 2
                conv = Conv2d(cin, cout, kernel=4, stride=2, pad=(pad, pad),
                              rng=rng())
                self.video_blocks.append(
                    Chain(conv, act(), BatchNorm(cout, cfg.bn_momentum)))
                size = conv_output_size(size, 4, 2, pad)
                if i == 0:
                    size = -(-size // 2)  # ceil-mode 2x2 pool
                cin = cout
            self.video_feature_shape = (cfg.video_channels[-1], size, size)

        seed_c, seed_f, seed_t = cfg.seed_shape()
        seed_size = seed_c * seed_f * seed_t
        flat_in = 0
        if cfg.uses_audio:
            flat_in += seed_size
        if cfg.uses_video:
            c, h, w = self.video_feature_shape
            flat_in += c * h * w
        widths = cfg.fusion_widths or (seed_size, seed_size, seed_size)
        if widths[-1] != seed_size:
            raise ValueError(
                f"last fusion width must equal the decoder seed size {seed_size}")
        self.fusion = Chain(
            Dense(flat_in, widths[0], rng=rng()), act(), BatchNorm(widths[0], cfg.bn_momentum),
            Dense(widths[0], widths[1], rng=rng()), act(), BatchNorm(widths[1], cfg.bn_momentum),
            Dense(widths[1], widths[2], rng=rng()), act(), BatchNorm(widths[2], cfg.bn_momentum),
        )
        self._seed_shape = (seed_c, seed_f, seed_t)

        # decoder mirrors the audio encoder; skips double D2/D4/D6 inputs
        ch = cfg.audio_channels
        self.decoder_blocks: list[Chain] = []
        self.skip_channels: list[int] = []
        for j in range(6):
            enc_i = 5 - j  # encoder layer this block inverts
            cin = ch[enc_i]
            cout = ch[enc_i - 1] if enc_i > 0 else 1
            has_skip = cfg.uses_audio and enc_i in (0, 2, 4) and j > 0
            if has_skip:
                cin *= 2
            self.skip_channels.append(ch[enc_i] if has_skip else 0)
            tconv = ConvTranspose2d(
                cin, cout, kernel=4, stride=2,
                pad=(freq_plan[enc_i]["pad"], time_plan[enc_i]["pad"]),
                out_pad=(freq_plan[enc_i]["out_pad"], time_plan[enc_i]["out_pad"]),
                rng=rng())
            if j < 5:
                self.decoder_blocks.append(
                    Chain(tconv, act(), BatchNorm(cout, cfg.bn_momentum)))
            else:
                self.decoder_blocks.append(Chain(tconv, ReLU()))

    # --- parameter bookkeeping -------------------------------------------

    def named_layers(self):
        for i, blk in enumerate(self.audio_blocks):
            for j, layer in enumerate(blk.layers):
                yield f"audio_enc.{i}.{j}", layer
        for i, blk in enumerate(self.video_blocks):
            for j, layer in enumerate(blk.layers):
                yield f"video_enc.{i}.{j}", layer
        for j, layer in enumerate(self.fusion.layers):
            yield f"fusion.{j}", layer
        for i, blk in enumerate(self.decoder_blocks):
            for j, layer in enumerate(blk.layers):
                yield f"decoder.{i}.{j}", layer

    def parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer in self.named_layers():
            for pname, value in layer.params().items():
                out[f"{name}.{pname}"] = value
        return out

    def buffers(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer in self.named_layers():
            for bname, value in layer.buffers().items():
                out[f"{name}.{bname}"] = value
        return out

    def gradients(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer in self.named_layers():
            for pname, g in layer.grads.items():
                out[f"{name}.{pname}"] = g
        return out

    def load_tensors(self, tensors: dict[str, np.ndarray]) -> None:
        own = {**self.parameters(), **self.buffers()}
        if set(own) != set(tensors):
            missing = set(own) ^ set(tensors)
            raise ValueError(f"tensor set mismatch: {sorted(missing)[:5]} ...")
        for name, layer in self.named_layers():
            for pname in layer.param_names + layer.buffer_names:
                key = f"{name}.{pname}"
                current = getattr(layer, pname)
                if current.shape != tensors[key].shape:
                    raise ValueError(f"{key}: shape {tensors[key].shape} != "
                                     f"{current.shape}")
                setattr(layer, pname, tensors[key].copy())

    # --- forward / backward ----------------------------------------------

    def _pad_audio(self, audio: np.ndarray) -> np.ndarray:
        b = audio.shape[0]
        if audio.shape[1:] != (N_BINS, SEGMENT_FRAMES):
            raise ValueError(f"audio batch must be (B, {N_BINS}, {SEGMENT_FRAMES}), "
                             f"got {audio.shape}")
        out = np.zeros((b, 1, PADDED_BINS, SEGMENT_FRAMES))
        out[:, 0, :N_BINS, :] = audio
        return out

    def forward(self, audio: np.ndarray | None, video: np.ndarray | None,
                train: bool = False, step: int | None = None) -> np.ndarray:
        cfg = self.cfg
        if cfg.uses_audio and audio is None:
            raise ValueError(f"{cfg.modality} network needs an audio batch")
        if cfg.uses_video and video is None:
            raise ValueError(f"{cfg.modality} network needs a video batch")
        batch = (audio if audio is not None else video).shape[0]

        enc_outs: list[np.ndarray] = []
        flats = []
        if cfg.uses_audio:
            h = self._pad_audio(audio)
            for blk in self.audio_blocks:
                h = blk.forward(h, train)
                enc_outs.append(h)
            flats.append(h.reshape(batch, -1))
        if cfg.uses_video:
            expect = (VIDEO_FRAMES, cfg.video_size, cfg.video_size)
            if video.shape[1:] != expect:
                raise ValueError(f"video batch must be (B, {expect[0]}, "
                                 f"{expect[1]}, {expect[2]}), got {video.shape}")
            v = video
            for i, blk in enumerate(self.video_blocks):
                v = blk.forward(v, train)
                if i == 0:
                    v = self.pool.forward(v, train)
                    if train:
                        if step is None:
                            step = self._step
                        self.dropout.set_rng(rng_for(self.seed, step, 7001))
                    v = self.dropout.forward(v, train)
            flats.append(v.reshape(batch, -1))
        self._flat_sizes = [f.shape[1] for f in flats]
        self._enc_outs_shapes = [o.shape for o in enc_outs]

        z = self.fusion.forward(np.concatenate(flats, axis=1), train)
        d = z.reshape(batch, *self._seed_shape)
        self._concat_splits = []
        for j, blk in enumerate(self.decoder_blocks):
            skip_c = self.skip_channels[j]
            if skip_c:
                tap = enc_outs[5 - j]  # o5, o3, o1 for j = 1, 3, 5
                d = np.concatenate([d, tap], axis=1)
            self._concat_splits.append(d.shape[1] - skip_c)
            d = blk.forward(d, train)
        if not np.all(np.isfinite(d)):
            raise FloatingPointError("non-finite activations in decoder output")
        self._out_shape = d.shape
        if train:
            self._step += 1
        return d[:, 0, :N_BINS, :]

    def backward(self, dmask: np.ndarray) -> None:
        """Propagate d(loss)/d(mask) back through the graph; gradients land
        in each layer's ``grads``. Call right after a train-mode forward."""
        cfg = self.cfg
        dd = np.zeros(self._out_shape)
        dd[:, 0, :N_BINS, :] = dmask

        dskips: dict[int, np.ndarray] = {}
        for j in reversed(range(6)):
            dd = self.decoder_blocks[j].backward(dd)
            split = self._concat_splits[j]
            if self.skip_channels[j]:
                dskips[5 - j] = dd[:, split:]
                dd = dd[:, :split]
        batch = dd.shape[0]
        dflat = self.fusion.backward(dd.reshape(batch, -1))

        offsets = np.cumsum([0] + self._flat_sizes)
        parts = [dflat[:, offsets[i]:offsets[i + 1]]
                 for i in range(len(self._flat_sizes))]
        part_iter = iter(parts)

        if cfg.uses_audio:
            da = next(part_iter).reshape(self._enc_outs_shapes[-1])
            for i in reversed(range(6)):
                da = self.audio_blocks[i].backward(da)
                if i - 1 in dskips:
                    da = da + dskips.pop(i - 1)
            assert not dskips
        if cfg.uses_video:
            dv = next(part_iter).reshape(batch, *self.video_feature_shape)
            for i in reversed(range(len(self.video_blocks))):
                if i == 0:
                    dv = self.dropout.backward(dv)
                    dv = self.pool.backward(dv)
                dv = self.video_blocks[i].backward(dv)

    def loss_and_gradients(self, audio, video, target,
                           step: int | None = None) -> tuple[float, np.ndarray]:
        """Train-mode forward + backward for one batch; returns (J, masks)."""
        masks = self.forward(audio, video, train=True, step=step)
        if not np.all(np.isfinite(masks)):
            raise FloatingPointError("non-finite mask estimates")
        residual = masks - target
        loss = float(np.mean(residual ** 2))
        self.backward(2.0 * residual / residual.size)
        return loss, masks


@dataclass
class NeuralMaskEstimator:
    """Adapter giving a trained MaskNet the segment-estimator interface."""

    net: MaskNet
    norm_stats: "NormalizationStats"

    @property
    def modality(self) -> str:
        return self.net.cfg.modality

    def estimate(self, noisy_segments: np.ndarray,
                 video_segments: np.ndarray | None = None) -> np.ndarray:
        from .data import standardize_audio, standardize_video
        audio = (standardize_audio(noisy_segments, self.norm_stats)
                 if self.net.cfg.uses_audio else None)
        video = None
        if self.net.cfg.uses_video:
            if video_segments is None:
                raise ValueError(f"{self.modality} estimator requires video")
            video = standardize_video(video_segments, self.norm_stats)
        out = self.net.forward(audio, video, train=False)
        return np.maximum(out, 0.0)
