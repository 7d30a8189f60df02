from fairaudit.storage.json_storage import JSONStorage, load_manifest, load_model

__all__ = ['JSONStorage', 'load_manifest', 'load_model']
