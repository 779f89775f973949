"""Exception hierarchy.

Every error raised by the package derives from :class:`ClusterLPError`, split
into data problems (bad input files or panels) and numerical failures. The CLI
maps the two families onto distinct exit codes.
"""


class ClusterLPError(Exception):
    pass


class ConfigError(ClusterLPError, ValueError):
    pass


class DataError(ClusterLPError, ValueError):
    pass


class NumericalError(ClusterLPError, ArithmeticError):
    pass


# data_model
class MissingColumn(DataError):
    pass


class InteriorGap(DataError):
    pass


class NonNumeric(DataError):
    pass


class DegenerateSeries(DataError):
    pass


class LagTooLarge(DataError):
    pass


# clustering
class TooFewPoints(DataError):
    pass


# statcore
class RankDeficient(NumericalError):
    pass


class BandwidthTooLarge(NumericalError):
    pass


# lp_estimator
class WindowTooShort(DataError):
    pass


class EmptyCluster(NumericalError):
    pass


# selection
class InvalidPair(ClusterLPError, ValueError):
    pass


class AllCellsFlagged(NumericalError):
    pass


# simulation
class ExplodedPath(NumericalError):
    pass


class NonStationarySpec(ConfigError):
    pass


class EmptyClusterInOracle(NumericalError):
    pass
