"""Exceptions thrown by the label subversion toolkit."""


class SubversionException(Exception): ...


class ConfigError(SubversionException): ...


class DatasetError(SubversionException): ...


class DatasetNotFound(DatasetError): ...


class NonNumericFeature(DatasetError): ...


class TooManyLabelValues(DatasetError): ...


class LabelColumnNotFound(DatasetError): ...


class InvalidDataset(DatasetError): ...


class InvalidSplit(DatasetError): ...


class EmptyDataset(DatasetError): ...


class DimensionMismatch(SubversionException): ...


class SingleClassTraining(SubversionException): ...


class InvalidParameters(SubversionException): ...


class CandidateSetError(SubversionException): ...


class InvalidAttackConfig(SubversionException): ...


class SurrogateFitFailed(SubversionException): ...


class OracleTooLarge(SubversionException): ...
