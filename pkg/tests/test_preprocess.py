import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ssrvpr import (
    RefineConfig,
    RefineParams,
    dilate,
    erode,
    fill_holes,
    refine_layer,
    remove_small_components,
)
from ssrvpr.preprocess import load_refine_config

masks = hnp.arrays(
    np.uint8, hnp.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=24),
    elements=st.integers(0, 1),
)


def ring5() -> np.ndarray:
    mask = np.ones((5, 5), np.uint8)
    mask[1:4, 1:4] = 0
    return mask


class TestDilateErode:
    def test_dilate_empty(self):
        assert dilate(np.zeros((6, 6), np.uint8), 3).sum() == 0

    def test_dilate_single_pixel(self):
        mask = np.zeros((11, 11), np.uint8)
        mask[5, 5] = 1
        out = dilate(mask, 3)
        expected = np.zeros_like(mask)
        expected[4:7, 4:7] = 1
        assert np.array_equal(out, expected)

    def test_dilate_full_is_full(self):
        mask = np.ones((7, 9), np.uint8)
        assert np.array_equal(dilate(mask, 3), mask)

    def test_erode_full_strips_border(self):
        mask = np.ones((6, 8), np.uint8)
        out = erode(mask, 3)
        expected = np.zeros_like(mask)
        expected[1:-1, 1:-1] = 1
        assert np.array_equal(out, expected)

    def test_erode_block_to_center(self):
        mask = np.zeros((9, 9), np.uint8)
        mask[3:6, 3:6] = 1
        out = erode(mask, 3)
        assert out.sum() == 1 and out[4, 4] == 1

    def test_erode_isolated_pixel_vanishes(self):
        mask = np.zeros((5, 5), np.uint8)
        mask[2, 2] = 1
        assert erode(mask, 3).sum() == 0

    @pytest.mark.parametrize("op", [dilate, erode])
    @pytest.mark.parametrize("kernel", [0, 2, 4])
    def test_even_kernel_rejected(self, op, kernel):
        with pytest.raises(ValueError, match="odd"):
            op(np.ones((3, 3), np.uint8), kernel)

    @settings(max_examples=50, deadline=None)
    @given(mask=masks, extra=masks, kernel=st.sampled_from([1, 3, 5]))
    def test_monotonicity(self, mask, extra, kernel):
        """A ⊆ B implies dilate(A) ⊆ dilate(B); erosion likewise."""
        if extra.shape != mask.shape:
            extra = np.zeros_like(mask)
        bigger = mask | extra
        for op in (dilate, erode):
            small, large = op(mask, kernel), op(bigger, kernel)
            assert not np.any(small & ~large)

    @settings(max_examples=50, deadline=None)
    @given(mask=masks, kernel=st.sampled_from([3, 5]))
    def test_duality_in_the_interior(self, mask, kernel):
        """Away from the border, erosion is dilation of the complement."""
        pad = kernel  # keep the border convention out of the comparison
        inner = np.pad(mask, pad)
        direct = erode(inner, kernel)
        dual = 1 - dilate(1 - inner, kernel)
        sl = slice(pad, -pad)
        assert np.array_equal(direct[sl, sl], dual[sl, sl])

    @settings(max_examples=40, deadline=None)
    @given(mask=masks, kernel=st.sampled_from([1, 3, 5]))
    def test_extensivity(self, mask, kernel):
        assert not np.any(mask & ~dilate(mask, kernel))
        assert not np.any(erode(mask, kernel) & ~mask)


class TestFillHoles:
    def test_enclosed_hole_filled(self):
        out = fill_holes(ring5(), max_hole_area=9, connectivity=8)
        assert np.array_equal(out, np.ones((5, 5), np.uint8))

    def test_hole_above_threshold_kept(self):
        out = fill_holes(ring5(), max_hole_area=2, connectivity=8)
        assert np.array_equal(out, ring5())

    def test_border_background_not_a_hole(self):
        mask = np.zeros((5, 5), np.uint8)
        mask[:, 2] = 1  # vertical bar; background touches the border
        out = fill_holes(mask, max_hole_area=100, connectivity=8)
        assert np.array_equal(out, mask)

    @settings(max_examples=40, deadline=None)
    @given(mask=masks, area=st.integers(0, 30))
    def test_idempotent(self, mask, area):
        once = fill_holes(mask, area, 8)
        assert np.array_equal(once, fill_holes(once, area, 8))


class TestRemoveSmallComponents:
    def test_small_component_dropped(self):
        mask = np.zeros((10, 20), np.uint8)
        mask[1, 1:4] = 1  # area 3
        mask[4:9, 4:14] = 1  # area 50
        out = remove_small_components(mask, 10, 8)
        assert out[1, 1:4].sum() == 0
        assert out[4:9, 4:14].sum() == 50

    def test_zero_threshold_is_identity(self):
        rng = np.random.default_rng(0)
        mask = (rng.random((15, 15)) < 0.4).astype(np.uint8)
        assert np.array_equal(remove_small_components(mask, 0, 8), mask)

    def test_exact_threshold_component_kept(self):
        mask = np.zeros((6, 6), np.uint8)
        mask[2, 1:5] = 1  # area 4
        out = remove_small_components(mask, 4, 8)
        assert np.array_equal(out, mask)

    @settings(max_examples=40, deadline=None)
    @given(mask=masks, area=st.integers(0, 30))
    def test_idempotent(self, mask, area):
        once = remove_small_components(mask, area, 8)
        assert np.array_equal(once, remove_small_components(once, area, 8))


def _oracle_refine(mask: np.ndarray, params: RefineParams) -> np.ndarray:
    """Direct pixel-level restatement of the four cleanup steps, built on
    shift-based morphology and BFS component walks."""

    def shift_or(src, k):
        r = k // 2
        h, w = src.shape
        out = np.zeros_like(src)
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                ys = slice(max(0, dy), min(h, h + dy))
                xs = slice(max(0, dx), min(w, w + dx))
                yd = slice(max(0, -dy), min(h, h - dy))
                xd = slice(max(0, -dx), min(w, w - dx))
                out[yd, xd] |= src[ys, xs]
        return out

    def shift_and(src, k):
        # out-of-image pixels count as background, so pad with zeros
        r = k // 2
        h, w = src.shape
        padded = np.pad(src, r)
        out = np.ones_like(src)
        for dy in range(-r, r + 1):
            for dx in range(-r, r + 1):
                out &= padded[r + dy:r + dy + h, r + dx:r + dx + w]
        return out

    def components(grid, value, connectivity):
        h, w = grid.shape
        seen = np.zeros((h, w), bool)
        offsets = [(-1, 0), (1, 0), (0, -1), (0, 1)]
        if connectivity == 8:
            offsets += [(-1, -1), (-1, 1), (1, -1), (1, 1)]
        comps = []
        for sy in range(h):
            for sx in range(w):
                if grid[sy, sx] != value or seen[sy, sx]:
                    continue
                stack, pix = [(sy, sx)], []
                seen[sy, sx] = True
                while stack:
                    y, x = stack.pop()
                    pix.append((y, x))
                    for dy, dx in offsets:
                        yy, xx = y + dy, x + dx
                        if 0 <= yy < h and 0 <= xx < w and not seen[yy, xx] \
                                and grid[yy, xx] == value:
                            seen[yy, xx] = True
                            stack.append((yy, xx))
                comps.append(pix)
        return comps

    out = shift_and(shift_or(mask, params.close_kernel), params.close_kernel)
    out = shift_or(shift_and(out, params.open_kernel), params.open_kernel)
    h, w = out.shape
    for pix in components(out, 0, params.connectivity):
        touches = any(y in (0, h - 1) or x in (0, w - 1) for y, x in pix)
        if not touches and len(pix) <= params.max_hole_area:
            for y, x in pix:
                out[y, x] = 1
    for pix in components(out, 1, params.connectivity):
        if len(pix) < params.min_component_area:
            for y, x in pix:
                out[y, x] = 0
    return out


class TestRefineLayer:
    def test_empty_mask(self):
        params = RefineParams(5, 3, 4, 8, 8)
        assert refine_layer(np.zeros((16, 16), np.uint8), params).sum() == 0

    def test_pipeline_matches_pixel_oracle(self):
        """32x32 mask with salt noise, a holey blob, and a fragment."""
        mask = np.zeros((32, 32), np.uint8)
        mask[6:20, 5:22] = 1
        mask[10:13, 9:12] = 0  # hole, area 9
        mask[25, 25] = 1  # salt
        mask[2, 28] = 1  # salt
        mask[26:28, 3:6] = 1  # small fragment, area 6
        params = RefineParams(
            close_kernel=3, open_kernel=3, max_hole_area=12,
            min_component_area=8, connectivity=8,
        )
        assert np.array_equal(refine_layer(mask, params), _oracle_refine(mask, params))

    def test_noise_removed_blob_survives(self):
        rng = np.random.default_rng(7)
        mask = np.zeros((32, 32), np.uint8)
        mask[8:24, 8:26] = 1
        salt = (rng.random(mask.shape) < 0.02) & (mask == 0)
        noisy = mask | salt.astype(np.uint8)
        params = RefineParams(3, 3, 10, 8, 8)
        out = refine_layer(noisy, params)
        assert np.array_equal(out, _oracle_refine(noisy, params))
        assert out[10, 10] == 1
        assert (out & ~dilate(mask, 3)).sum() == 0  # noise gone

    def test_clean_blob_fixed_point(self):
        mask = np.zeros((32, 32), np.uint8)
        mask[8:26, 6:28] = 1
        params = RefineParams(5, 3, 10, 20, 8)
        out = refine_layer(mask, params)
        assert np.array_equal(out, _oracle_refine(mask, params))
        assert np.array_equal(out, mask)

    @settings(max_examples=25, deadline=None)
    @given(mask=masks)
    def test_random_masks_match_oracle(self, mask):
        params = RefineParams(3, 3, 6, 5, 8)
        assert np.array_equal(
            refine_layer(mask, params), _oracle_refine(mask, params)
        )

    @settings(max_examples=25, deadline=None)
    @given(mask=masks)
    def test_support_bounded_by_closing_dilation(self, mask):
        params = RefineParams(5, 3, 6, 5, 8)
        out = refine_layer(mask, params)
        assert not np.any(out & ~dilate(mask, params.close_kernel))


class TestRefineConfig:
    def test_fraction_resolution(self):
        cfg = RefineConfig()
        params = cfg.resolve(1024, 1024)
        assert params.max_hole_area == int(0.001 * 1024 * 1024)
        assert params.min_component_area == int(0.002 * 1024 * 1024)

    def test_absolute_wins_over_fraction(self):
        cfg = RefineConfig(max_hole_area=42)
        assert cfg.resolve(100, 100).max_hole_area == 42

    def test_loaded_from_config_section(self, cityscapes_cfg_path):
        cfg = load_refine_config(cityscapes_cfg_path)
        assert cfg.close_kernel == 5
        assert cfg.open_kernel == 3
        assert cfg.connectivity == 8

    def test_invalid_kernel_rejected(self):
        with pytest.raises(ValueError):
            RefineParams(close_kernel=4)
        with pytest.raises(ValueError):
            RefineParams(connectivity=6)
