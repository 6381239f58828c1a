import pytest

from ilcscan.attribution import (
    ApiPermissionMap,
    CatalogEntry,
    DangerousPermissionList,
    LibraryCatalog,
)

READ_PHONE_STATE = "android.permission.READ_PHONE_STATE"
FINE_LOCATION = "android.permission.ACCESS_FINE_LOCATION"
READ_CONTACTS = "android.permission.READ_CONTACTS"
RECORD_AUDIO = "android.permission.RECORD_AUDIO"

TELEPHONY_GET_DEVICE_ID = ("Landroid/telephony/TelephonyManager;", "getDeviceId",
                           (), "Ljava/lang/String;")
LOCATION_GET_LAST = ("Landroid/location/LocationManager;", "getLastKnownLocation",
                     ("Ljava/lang/String;",), "Landroid/location/Location;")
CONTACTS_QUERY = ("Landroid/provider/ContactsContract;", "query",
                  (), "Landroid/database/Cursor;")


@pytest.fixture
def catalog():
    return LibraryCatalog([
        CatalogEntry("com/facebook", "facebook", "social"),
        CatalogEntry("com/facebook/ads", "facebook-ads", "ad", "fb-audience"),
        CatalogEntry("com/mopub", "mopub", "ad", "mopub-net"),
        CatalogEntry("com/flurry", "flurry", "analytics"),
        CatalogEntry("com/inmobi", "inmobi", "ad"),
        CatalogEntry("org/apache/commons", "commons", "utility"),
    ])


@pytest.fixture
def dangerous():
    return DangerousPermissionList(frozenset({
        READ_PHONE_STATE, FINE_LOCATION, READ_CONTACTS, RECORD_AUDIO,
    }))


def _full_descriptor(params, ret):
    return "(" + "".join(params) + ")" + ret


@pytest.fixture
def api_map():
    entries = {
        (TELEPHONY_GET_DEVICE_ID[0], TELEPHONY_GET_DEVICE_ID[1],
         _full_descriptor(*TELEPHONY_GET_DEVICE_ID[2:])): {READ_PHONE_STATE},
        (LOCATION_GET_LAST[0], LOCATION_GET_LAST[1],
         _full_descriptor(*LOCATION_GET_LAST[2:])): {FINE_LOCATION},
        (CONTACTS_QUERY[0], CONTACTS_QUERY[1],
         _full_descriptor(*CONTACTS_QUERY[2:])): {READ_CONTACTS},
    }
    return ApiPermissionMap(entries, api_level_label="test")
