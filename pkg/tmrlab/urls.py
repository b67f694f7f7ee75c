"""tmrlab URL Configuration

Only the admin is routed: archived campaigns and their shots are inspected
there, the simulator itself is driven by management commands.
"""
from django.contrib import admin
from django.urls import path
from django.views.generic import RedirectView


urlpatterns = [
    path('', RedirectView.as_view(pattern_name='admin:index', permanent=True)),
    path('admin/', admin.site.urls),
]
