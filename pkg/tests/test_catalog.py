import pytest

from cloudconf.catalog import (
    CloudConfiguration, VmType, default_catalog, enumerate_space, load_catalog, normalize_coordinates,
    order_vm_axis,
)
from cloudconf.exceptions import DuplicateKeyError, OutOfBoundsError, ParseError, ValidationError

HEADER = "name,vcpus,mem_gib,network_gbps,price_usd_hour\n"


def test_parse_single_row():
    (vm,) = load_catalog(HEADER + "m5n.large,2,8,25,0.119\n")
    assert vm == VmType("m5n.large", 2, 8.0, 25.0, 0.119)


def test_builtin_table_has_32_vms():
    vms = default_catalog()
    assert len(vms) == 32
    assert len({vm.name for vm in vms}) == 32


def test_duplicate_name_rejected():
    with pytest.raises(DuplicateKeyError):
        load_catalog(HEADER + "c5.large,2,4,10,0.085\nc5.large,2,4,10,0.085\n")


def test_malformed_row_reports_line():
    with pytest.raises(ParseError) as info:
        load_catalog(HEADER + "c5.large,2,4,10,0.085\nbad,row\n")
    assert info.value.line == 3


def test_empty_catalog_rejected():
    with pytest.raises(ValidationError):
        load_catalog(HEADER)


def test_cheapest_vm_first():
    ordered = order_vm_axis(default_catalog())
    assert ordered[0].name == "c5.large"
    assert ordered[0].price_usd_hour == 0.085
    prices = [vm.price_usd_hour for vm in ordered]
    assert prices == sorted(prices)


def test_order_ties_broken_by_memory():
    big = VmType("x", 2, 16.0, 10.0, 0.1)
    small = VmType("y", 2, 8.0, 10.0, 0.1)
    assert order_vm_axis([big, small]) == [small, big]
    assert order_vm_axis([big]) == [big]
    with pytest.raises(ValidationError):
        order_vm_axis([])


def test_space_sizes(space):
    assert len(space) == 192
    assert space.shape == (32, 6)
    one = enumerate_space([VmType("z", 1, 1.0, 1.0, 1.0)], (1,))
    assert len(one) == 1


def test_three_by_two_coordinates(small_space):
    sub = enumerate_space(small_space.vms, (1, 2))
    assert len(sub) == 6
    assert sub.coordinates(CloudConfiguration(2, 2)) == (2, 1)


def test_enumeration_is_vm_major(small_space):
    configs = list(small_space)
    assert configs[:3] == [CloudConfiguration(0, 1), CloudConfiguration(0, 2), CloudConfiguration(0, 4)]
    for i, c in enumerate(configs):
        assert small_space.index(c) == i
        assert small_space.config_at(i) == c


def test_normalized_coordinates(space):
    assert normalize_coordinates(space, CloudConfiguration(0, 1)) == (0.0, 0.0)
    assert normalize_coordinates(space, CloudConfiguration(31, 32)) == (1.0, 1.0)
    assert normalize_coordinates(space, CloudConfiguration(16, 8)) == pytest.approx((16 / 31, 3 / 5))


def test_out_of_grid(space):
    with pytest.raises(OutOfBoundsError):
        normalize_coordinates(space, CloudConfiguration(32, 1))
    with pytest.raises(OutOfBoundsError):
        space.index(CloudConfiguration(0, 3))


def test_invalid_sizes_and_vms():
    vm = VmType("z", 1, 1.0, 1.0, 1.0)
    with pytest.raises(ValidationError):
        enumerate_space([vm], ())
    with pytest.raises(ValidationError):
        enumerate_space([vm], (2, 1))
    with pytest.raises(ValidationError):
        VmType("bad", 0, 1.0, 1.0, 1.0)
    with pytest.raises(ValidationError):
        VmType("bad", 1, 1.0, 1.0, -1.0)


def test_label_roundtrip(space):
    c = space.config_for("m5n.large", 2)
    assert space.label(c) == "m5n.large:2"
