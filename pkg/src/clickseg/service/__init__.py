from clickseg.service.rle import decode_rle, encode_rle
from clickseg.service.store import SessionRecord, SessionStore
from clickseg.service.app import create_app

__all__ = ["SessionRecord", "SessionStore", "create_app", "decode_rle", "encode_rle"]
