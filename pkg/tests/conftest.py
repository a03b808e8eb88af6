"""Shared fixtures for the varaux test suite."""

from __future__ import annotations

import pytest

from varaux import Population, PopulationSpec, generate_population


@pytest.fixture(scope="session")
def default_pop() -> Population:
    """The package's reference synthetic population (default spec)."""
    return generate_population(PopulationSpec())


@pytest.fixture()
def tiny_pop() -> Population:
    """A five-unit population with hand-checkable integer data."""
    return Population(
        y=[1.0, 2.0, 3.0, 4.0, 6.0],
        x=[2.0, 3.0, 5.0, 7.0, 8.0],
        z=[9.0, 7.0, 4.0, 3.0, 2.0],
    )
