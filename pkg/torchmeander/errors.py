
class MeanderError(Exception):
    pass

class ParameterDomainError(MeanderError, ValueError):
    pass

class GeometryError(MeanderError, ValueError):
    pass

class DiscretizationError(MeanderError):
    pass

class AnalysisError(MeanderError):
    pass

class ConfigurationError(MeanderError):
    pass

class ProximityError(MeanderError):
    def __init__(self, message, segment_index=None, point_index=None):
        super(ProximityError, self).__init__(message)
        self.segment_index = segment_index
        self.point_index = point_index

class SceneError(MeanderError):
    def __init__(self, path, message):
        super(SceneError, self).__init__(f'{path}: {message}')
        self.path = path
        self.detail = message

def error_record(error):
    # one JSON-able object per error, written by the CLI to stderr
    record = {'error': type(error).__name__, 'message': str(error)}
    for key in ('path', 'segment_index', 'point_index'):
        value = getattr(error, key, None)
        if value is not None:
            record[key] = value
    return record
