import numpy as np
import pytest

from pod_eit.cli.render import RenderSpec, parse_modes, render_layout_svg, render_modes_svg, shared_color_range
from pod_eit.core.exceptions import InvalidParameterError


def test_shared_color_range_is_symmetric():
    assert shared_color_range(np.array([[0.5, -2.0], [1.0, 0.0]])) == 2.0
    assert shared_color_range(np.zeros((3, 2))) == 1.0


def test_parse_modes():
    assert parse_modes("1, 2,5") == (1, 2, 5)
    with pytest.raises(InvalidParameterError):
        parse_modes("0,1")
    with pytest.raises(InvalidParameterError):
        parse_modes("a")


def test_render_spec_validation():
    with pytest.raises(InvalidParameterError):
        RenderSpec(color_range=0.0)
    with pytest.raises(InvalidParameterError):
        RenderSpec(color_range=1.0, size=4)


def test_modes_share_one_scale(disk):
    fields = np.zeros((disk.element_count, 2))
    fields[:, 0] = 1.0
    fields[:, 1] = -1.0
    svg = render_modes_svg(disk, fields, RenderSpec(color_range=1.0, panel_modes=(1, 2)))
    assert svg.count('class="panel"') == 2
    assert svg.count("<polygon") == 2 * disk.element_count
    # the saturated ends of the colormap differ
    assert svg.count('fill="#67001f" stroke') == disk.element_count
    assert svg.count('fill="#053061" stroke') == disk.element_count


def test_field_shape_is_checked(disk):
    with pytest.raises(InvalidParameterError):
        render_modes_svg(disk, np.zeros((disk.element_count + 1, 1)), RenderSpec(color_range=1.0, panel_modes=(1,)))
    with pytest.raises(InvalidParameterError):
        render_modes_svg(disk, np.zeros((disk.element_count, 2)), RenderSpec(color_range=1.0, panel_modes=(1,)))


def test_layout_svg_marks_selected_and_reference():
    svg = render_layout_svg(16, [0, 1, 3, 6, 8, 9, 11, 14], 0.1, reference=range(0, 16, 2), title="best")
    assert svg.count('class="electrode"') == 8
    assert svg.count('class="reference"') == 8
    assert "<title>best</title>" in svg
