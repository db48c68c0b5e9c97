# Property Tests Package
