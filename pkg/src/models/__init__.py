# Data Models Package
from .benchmark import BenchmarkFunction, ProblemInstance, DesignSet
from .feature_vector import FeatureConfig, FeatureVector, FeatureTable
from .rm_config import RMConfig, ClassifierConfig
from .tree import FittedTree, TrainedRegressor, ClassifierMember, ClassifierEnsemble
from .personalized import QTable, EnsembleMember, ClassEnsemble, PersonalizedModel
from .performance_record import PerformanceRecord
from .evaluation import FoldSpec, ScenarioReport, ConfusionMatrix

__all__ = [
    'BenchmarkFunction',
    'ProblemInstance',
    'DesignSet',
    'FeatureConfig',
    'FeatureVector',
    'FeatureTable',
    'RMConfig',
    'ClassifierConfig',
    'FittedTree',
    'TrainedRegressor',
    'ClassifierMember',
    'ClassifierEnsemble',
    'QTable',
    'EnsembleMember',
    'ClassEnsemble',
    'PersonalizedModel',
    'PerformanceRecord',
    'FoldSpec',
    'ScenarioReport',
    'ConfusionMatrix',
]
