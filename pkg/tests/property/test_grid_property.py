"""Property tests for the regression configuration grid.

Property 1: Grid Exactness
The full grid SHALL contain exactly 430 configurations (30 DecisionTree,
200 RandomForest, 200 BaggingDT) in (technique, crit, minsplit, nest) order,
and every canonical name SHALL parse back to its configuration.
"""
import pytest
from hypothesis import given, strategies as st, settings

from src.errors import ContractError
from src.models.rm_config import MINSPLIT_GRID, NEST_GRID, RMConfig
from src.services.tree_models import enumerate_grid, parse_canonical_name, quick_grid


@st.composite
def rm_config_strategy(draw):
    """Generate a valid RMConfig."""
    technique = draw(st.sampled_from(["DecisionTree", "RandomForest", "BaggingDT"]))
    crits = ["mse", "mae", "friedman_mse"] if technique == "DecisionTree" else ["mse", "mae"]
    crit = draw(st.sampled_from(crits))
    minsplit = draw(st.sampled_from(MINSPLIT_GRID))
    nest = None if technique == "DecisionTree" else draw(st.sampled_from(NEST_GRID))
    return RMConfig(technique, crit, minsplit, nest)


class TestGridExactness:
    """Property 1: Grid Exactness"""

    def test_grid_has_430_configs(self):
        """The full grid SHALL hold 430 distinct configurations."""
        grid = enumerate_grid()
        assert len(grid) == 430
        assert len({c.canonical_name for c in grid}) == 430

    def test_per_technique_counts(self):
        """DecisionTree SHALL contribute 30 configs, each ensemble technique 200."""
        grid = enumerate_grid()
        counts = {}
        for config in grid:
            counts[config.technique] = counts.get(config.technique, 0) + 1
        assert counts == {"DecisionTree": 30, "RandomForest": 200, "BaggingDT": 200}

    def test_first_config_name(self):
        """The first configuration SHALL be the mse DecisionTree with minsplit 2."""
        assert enumerate_grid()[0].canonical_name == "DecisionTree_crit-mse_minsplit-2"

    def test_grid_order_is_stable(self):
        """Grid order SHALL follow the grid key."""
        grid = enumerate_grid()
        assert [c.grid_key for c in grid] == sorted(c.grid_key for c in grid)

    def test_quick_grid_is_subset(self):
        """Every quick-grid config SHALL belong to the full grid."""
        full = {c.canonical_name for c in enumerate_grid()}
        quick = quick_grid()
        assert 0 < len(quick) < 430
        assert all(c.canonical_name in full for c in quick)

    @given(config=rm_config_strategy())
    @settings(max_examples=100)
    def test_canonical_name_round_trip(self, config):
        """Parsing a canonical name SHALL return the same configuration."""
        assert parse_canonical_name(config.canonical_name) == config

    @given(config=rm_config_strategy())
    @settings(max_examples=50)
    def test_dotted_spelling_parses(self, config):
        """Dotted external spellings SHALL parse to the same configuration."""
        dotted = config.canonical_name.replace("-", ".")
        assert parse_canonical_name(dotted) == config

    def test_invalid_combinations_rejected(self):
        """Ensemble techniques SHALL reject friedman_mse and a missing nest."""
        with pytest.raises(ContractError):
            RMConfig("RandomForest", "friedman_mse", 2, 10)
        with pytest.raises(ContractError):
            RMConfig("BaggingDT", "mse", 2)
        with pytest.raises(ContractError):
            RMConfig("DecisionTree", "mse", 3)
